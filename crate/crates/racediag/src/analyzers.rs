//! The streaming single-pass analyzers: FastTrack, the HB and SHB race-pair
//! variants, and the extended FastTrack pass that also accumulates the
//! dependency-candidate edges for the diagnosis phase.
//!
//! All four walk the trace once keeping one vector clock per thread, one per
//! lock (the last release), and per-variable epoch sets of concurrent reads
//! (`cr`) and, for the pair-reporting variants, concurrent writes (`cw`).
//! The sets are antichains: an epoch is dropped as soon as a later same-kind
//! access on the same variable happens after it, which keeps them at one
//! entry per thread at most.

use crate::diagnosis::LabeledEdge;
use crate::trace::{Event, EventKind, Trace};
use crate::vclock::{Epoch, VectorClock};
use serde::Serialize;
use std::collections::BTreeMap;

/// Race pair orientation: `first` is always the event earlier in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RaceCategory {
    /// Both events are writes.
    WriteWrite,
    /// The write appears first in the trace.
    WriteRead,
    /// The read appears first in the trace.
    ReadWrite,
}

impl RaceCategory {
    pub fn short(&self) -> &'static str {
        match self {
            RaceCategory::WriteWrite => "WW",
            RaceCategory::WriteRead => "WR",
            RaceCategory::ReadWrite => "RW",
        }
    }
}

/// Two conflicting events unordered by the analysis that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RacePair {
    pub first: u32,
    pub second: u32,
    pub category: RaceCategory,
}

impl RacePair {
    /// Builds the pair in trace orientation from two conflicting positions.
    pub fn new(t: &Trace, a: u32, b: u32) -> RacePair {
        let (first, second) = if a < b { (a, b) } else { (b, a) };
        let fk = &t.event(first).kind;
        let sk = &t.event(second).kind;
        debug_assert_eq!(fk.var(), sk.var(), "race pair must access one variable");
        debug_assert!(fk.is_write() || sk.is_write());
        let category = match (fk.is_write(), sk.is_write()) {
            (true, true) => RaceCategory::WriteWrite,
            (true, false) => RaceCategory::WriteRead,
            (false, true) => RaceCategory::ReadWrite,
            (false, false) => unreachable!("at least one side of a race is a write"),
        };
        RacePair {
            first,
            second,
            category,
        }
    }

    /// Unordered pair of source locations, for location-level dedup.
    pub fn loc_pair(&self, t: &Trace) -> (String, String) {
        let a = t.loc_or_default(t.event(self.first));
        let b = t.loc_or_default(t.event(self.second));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Maxima of the per-variable epoch set sizes seen during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AnalyzerStats {
    pub max_cw: usize,
    pub max_cr: usize,
}

/// Epoch set member; carries the event position purely for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SetEntry {
    tid: u32,
    stamp: u32,
    pos: u32,
}

impl SetEntry {
    fn concurrent_with(&self, clock: &VectorClock) -> bool {
        self.stamp > clock.get(self.tid as usize)
    }
}

/// Per-thread clocks plus the event-indexed snapshot arena.
struct Clocks {
    th: Vec<VectorClock>,
    /// Clock of each event at the start of its processing, flattened.
    rows: Vec<u32>,
    threads: usize,
}

impl Clocks {
    fn new(t: &Trace) -> Clocks {
        let k = t.thread_count();
        Clocks {
            th: (0..k).map(|i| VectorClock::initial(k, i)).collect(),
            rows: Vec::with_capacity(t.len() * k),
            threads: k,
        }
    }

    fn snapshot(&mut self, e: &Event) {
        let clock = &self.th[e.tid.0 as usize];
        self.rows.extend_from_slice(clock.as_slice());
        debug_assert_eq!(self.rows.len(), e.pos as usize * self.threads);
    }
}

/// Clock of every event at the moment it was processed.
#[derive(Debug, Clone)]
pub struct EventClocks {
    threads: usize,
    rows: Vec<u32>,
}

impl EventClocks {
    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Clock row of the event at 1-based position `pos`.
    pub fn clock(&self, pos: u32) -> &[u32] {
        let k = self.threads;
        let i = (pos - 1) as usize * k;
        &self.rows[i..i + k]
    }

    pub fn to_vector(&self, pos: u32) -> VectorClock {
        VectorClock::from(self.clock(pos).to_vec())
    }
}

/// Final analyzer state of the extended pass, kept for reporting and for the
/// diagnosis phase.
pub struct AnalyzerState {
    /// Final per-thread clocks.
    pub th: Vec<VectorClock>,
    /// Final per-lock release clocks.
    pub locks: Vec<VectorClock>,
    /// Position of the last release per lock.
    pub last_release: Vec<Option<u32>>,
    /// Epoch of every read/write event.
    pub epoch_to_event: BTreeMap<Epoch, u32>,
    /// Clock snapshots for every event.
    pub clocks: EventClocks,
    pub stats: AnalyzerStats,
}

/// Output of the extended FastTrack pass (phase 1 of the diagnosis).
pub struct SshbOutput {
    pub races: Vec<RacePair>,
    pub edges: Vec<LabeledEdge>,
    pub state: AnalyzerState,
}

fn retain_concurrent(set: &mut Vec<SetEntry>, clock: &VectorClock) {
    set.retain(|e| e.concurrent_with(clock));
}

/// Extended FastTrack pass: reports every race pair the HB variant reports
/// and additionally emits the graph edges the diagnosis phase searches:
/// program-order successors, release-to-acquire dependencies, and a
/// write-to-read edge per dependency candidate discovered in the scans.
pub fn run_sshb_phase1(t: &Trace) -> SshbOutput {
    let vars = t.var_count();
    let lock_count = t.lock_count();
    let mut clocks = Clocks::new(t);
    let mut lock_clock: Vec<VectorClock> =
        (0..lock_count).map(|_| VectorClock::zero(t.thread_count())).collect();
    let mut last_release: Vec<Option<u32>> = vec![None; lock_count];
    let mut cw: Vec<Vec<SetEntry>> = vec![Vec::new(); vars];
    let mut cr: Vec<Vec<SetEntry>> = vec![Vec::new(); vars];
    let mut last_in_thread: Vec<Option<u32>> = vec![None; t.thread_count()];
    let mut races = Vec::new();
    let mut edges = Vec::new();
    let mut epoch_to_event = BTreeMap::new();
    let mut stats = AnalyzerStats::default();

    for e in t.events() {
        clocks.snapshot(e);
        let tid = e.tid.0 as usize;

        // Program-order successor edge, before the event's own handling so
        // emission order matches the scan edges' numbering.
        if let Some(prev) = last_in_thread[tid] {
            edges.push(LabeledEdge::hb(prev, e.pos));
        }
        last_in_thread[tid] = Some(e.pos);

        match e.kind {
            EventKind::Acquire(l) => {
                let l = l.0 as usize;
                let joined = clocks.th[tid].join(&lock_clock[l]);
                clocks.th[tid] = joined;
                if let Some(rel_pos) = last_release[l] {
                    edges.push(LabeledEdge::hb(rel_pos, e.pos));
                }
            }
            EventKind::Release(l) => {
                let l = l.0 as usize;
                lock_clock[l] = clocks.th[tid].clone();
                last_release[l] = Some(e.pos);
                clocks.th[tid].inc_in_place(tid);
            }
            EventKind::Write(v) => {
                let v = v.0 as usize;
                let me = SetEntry {
                    tid: e.tid.0,
                    stamp: clocks.th[tid].get(tid),
                    pos: e.pos,
                };
                epoch_to_event.insert(Epoch::new(me.tid, me.stamp), e.pos);
                for w in &cw[v] {
                    if w.concurrent_with(&clocks.th[tid]) {
                        races.push(RacePair::new(t, w.pos, e.pos));
                    }
                }
                retain_concurrent(&mut cw[v], &clocks.th[tid]);
                cw[v].insert(0, me);
                stats.max_cw = stats.max_cw.max(cw[v].len());
                for r in &cr[v] {
                    if r.concurrent_with(&clocks.th[tid]) {
                        edges.push(LabeledEdge::wrd(e.pos, r.pos));
                        races.push(RacePair::new(t, r.pos, e.pos));
                    }
                }
                clocks.th[tid].inc_in_place(tid);
            }
            EventKind::Read(v) => {
                let v = v.0 as usize;
                let me = SetEntry {
                    tid: e.tid.0,
                    stamp: clocks.th[tid].get(tid),
                    pos: e.pos,
                };
                epoch_to_event.insert(Epoch::new(me.tid, me.stamp), e.pos);
                for w in &cw[v] {
                    if w.concurrent_with(&clocks.th[tid]) {
                        edges.push(LabeledEdge::wrd(w.pos, e.pos));
                        races.push(RacePair::new(t, w.pos, e.pos));
                    }
                }
                retain_concurrent(&mut cr[v], &clocks.th[tid]);
                cr[v].insert(0, me);
                stats.max_cr = stats.max_cr.max(cr[v].len());
                clocks.th[tid].inc_in_place(tid);
            }
        }
    }

    SshbOutput {
        races,
        edges,
        state: AnalyzerState {
            th: clocks.th,
            locks: lock_clock,
            last_release,
            epoch_to_event,
            clocks: EventClocks {
                threads: t.thread_count(),
                rows: clocks.rows,
            },
            stats,
        },
    }
}

/// FastTrack race-pair variant: the race logic of the extended pass without
/// edge bookkeeping. Reports conflicting pairs unordered by program order
/// and release-acquire synchronization.
pub fn run_hb_partner(t: &Trace) -> Vec<RacePair> {
    run_partner(t, false).0
}

/// SHB race-pair variant: additionally joins each reader's clock with the
/// last-write clock of the variable, imposing the nearest write-read
/// dependency of the trace.
pub fn run_shb_partner(t: &Trace) -> Vec<RacePair> {
    run_partner(t, true).0
}

/// HB variant with its frontier statistics, for bound checks.
pub fn run_hb_partner_with_stats(t: &Trace) -> (Vec<RacePair>, AnalyzerStats) {
    run_partner(t, false)
}

pub fn run_shb_partner_with_stats(t: &Trace) -> (Vec<RacePair>, AnalyzerStats) {
    run_partner(t, true)
}

fn run_partner(t: &Trace, with_wrd: bool) -> (Vec<RacePair>, AnalyzerStats) {
    let vars = t.var_count();
    let mut clocks = Clocks::new(t);
    let mut lock_clock: Vec<VectorClock> =
        (0..t.lock_count()).map(|_| VectorClock::zero(t.thread_count())).collect();
    // Last-write clock per variable, zero until the first write.
    let mut last_write: Vec<VectorClock> =
        (0..vars).map(|_| VectorClock::zero(t.thread_count())).collect();
    let mut cw: Vec<Vec<SetEntry>> = vec![Vec::new(); vars];
    let mut cr: Vec<Vec<SetEntry>> = vec![Vec::new(); vars];
    let mut races = Vec::new();
    let mut stats = AnalyzerStats::default();

    for e in t.events() {
        let tid = e.tid.0 as usize;
        match e.kind {
            EventKind::Acquire(l) => {
                let joined = clocks.th[tid].join(&lock_clock[l.0 as usize]);
                clocks.th[tid] = joined;
            }
            EventKind::Release(l) => {
                lock_clock[l.0 as usize] = clocks.th[tid].clone();
                clocks.th[tid].inc_in_place(tid);
            }
            EventKind::Write(v) => {
                let v = v.0 as usize;
                let me = SetEntry {
                    tid: e.tid.0,
                    stamp: clocks.th[tid].get(tid),
                    pos: e.pos,
                };
                for w in &cw[v] {
                    if w.concurrent_with(&clocks.th[tid]) {
                        races.push(RacePair::new(t, w.pos, e.pos));
                    }
                }
                retain_concurrent(&mut cw[v], &clocks.th[tid]);
                cw[v].insert(0, me);
                stats.max_cw = stats.max_cw.max(cw[v].len());
                for r in &cr[v] {
                    if r.concurrent_with(&clocks.th[tid]) {
                        races.push(RacePair::new(t, r.pos, e.pos));
                    }
                }
                if with_wrd {
                    last_write[v] = clocks.th[tid].clone();
                }
                clocks.th[tid].inc_in_place(tid);
            }
            EventKind::Read(v) => {
                let v = v.0 as usize;
                let me = SetEntry {
                    tid: e.tid.0,
                    stamp: clocks.th[tid].get(tid),
                    pos: e.pos,
                };
                for w in &cw[v] {
                    if w.concurrent_with(&clocks.th[tid]) {
                        races.push(RacePair::new(t, w.pos, e.pos));
                    }
                }
                if with_wrd {
                    let lw = last_write[v].clone();
                    clocks.th[tid].join_in_place(&lw);
                }
                retain_concurrent(&mut cr[v], &clocks.th[tid]);
                cr[v].insert(0, me);
                stats.max_cr = stats.max_cr.max(cr[v].len());
                clocks.th[tid].inc_in_place(tid);
            }
        }
    }
    (races, stats)
}

/// How a FastTrack race occurrence was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FastTrackCheck {
    /// Current write against a concurrent read epoch.
    WriteVsRead,
    /// Current write against the last-write epoch.
    WriteVsWrite,
    /// Current read against the last-write epoch.
    ReadVsWrite,
}

/// One race occurrence: the event FastTrack was processing when the check
/// fired, with its clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FastTrackRace {
    pub pos: u32,
    pub clock: VectorClock,
    pub check: FastTrackCheck,
    /// The stored epoch that was concurrent, resolved to its event.
    pub partner_pos: u32,
    pub category: RaceCategory,
}

/// FastTrack output. Occurrences are in detection order; everything past the
/// first is reliable only if the earlier races are benign, since FastTrack
/// never orders writes with the reads observing them.
#[derive(Debug, Clone, Serialize)]
pub struct FastTrackReport {
    pub occurrences: Vec<FastTrackRace>,
    /// FastTrack's standing caveat.
    pub sound_up_to_first_race_only: bool,
    pub stats: AnalyzerStats,
}

/// Classic FastTrack with a last-write epoch per variable and a concurrent
/// read set.
pub fn run_fasttrack(t: &Trace) -> FastTrackReport {
    let vars = t.var_count();
    let mut clocks = Clocks::new(t);
    let mut lock_clock: Vec<VectorClock> =
        (0..t.lock_count()).map(|_| VectorClock::zero(t.thread_count())).collect();
    let mut last_write: Vec<Option<SetEntry>> = vec![None; vars];
    let mut reads: Vec<Vec<SetEntry>> = vec![Vec::new(); vars];
    let mut occurrences = Vec::new();
    let mut stats = AnalyzerStats::default();

    for e in t.events() {
        let tid = e.tid.0 as usize;
        match e.kind {
            EventKind::Acquire(l) => {
                let joined = clocks.th[tid].join(&lock_clock[l.0 as usize]);
                clocks.th[tid] = joined;
            }
            EventKind::Release(l) => {
                lock_clock[l.0 as usize] = clocks.th[tid].clone();
                clocks.th[tid].inc_in_place(tid);
            }
            EventKind::Write(v) => {
                let v = v.0 as usize;
                for r in &reads[v] {
                    if r.concurrent_with(&clocks.th[tid]) {
                        occurrences.push(FastTrackRace {
                            pos: e.pos,
                            clock: clocks.th[tid].clone(),
                            check: FastTrackCheck::WriteVsRead,
                            partner_pos: r.pos,
                            category: RaceCategory::ReadWrite,
                        });
                    }
                }
                if let Some(w) = &last_write[v] {
                    if w.concurrent_with(&clocks.th[tid]) {
                        occurrences.push(FastTrackRace {
                            pos: e.pos,
                            clock: clocks.th[tid].clone(),
                            check: FastTrackCheck::WriteVsWrite,
                            partner_pos: w.pos,
                            category: RaceCategory::WriteWrite,
                        });
                    }
                }
                last_write[v] = Some(SetEntry {
                    tid: e.tid.0,
                    stamp: clocks.th[tid].get(tid),
                    pos: e.pos,
                });
                clocks.th[tid].inc_in_place(tid);
            }
            EventKind::Read(v) => {
                let v = v.0 as usize;
                if let Some(w) = &last_write[v] {
                    if w.concurrent_with(&clocks.th[tid]) {
                        occurrences.push(FastTrackRace {
                            pos: e.pos,
                            clock: clocks.th[tid].clone(),
                            check: FastTrackCheck::ReadVsWrite,
                            partner_pos: w.pos,
                            category: RaceCategory::WriteRead,
                        });
                    }
                }
                let me = SetEntry {
                    tid: e.tid.0,
                    stamp: clocks.th[tid].get(tid),
                    pos: e.pos,
                };
                retain_concurrent(&mut reads[v], &clocks.th[tid]);
                reads[v].insert(0, me);
                stats.max_cr = stats.max_cr.max(reads[v].len());
                clocks.th[tid].inc_in_place(tid);
            }
        }
    }

    FastTrackReport {
        occurrences,
        sound_up_to_first_race_only: true,
        stats,
    }
}
