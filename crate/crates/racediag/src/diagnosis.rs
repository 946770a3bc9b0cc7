//! Phase 2: the labeled event graph and the guaranteed/maybe verdict per
//! race pair.
//!
//! The graph holds every event as a node. Happens-before is represented in
//! generating form (program-order successors plus release-to-acquire edges),
//! whose reachability equals the full relation. On top of that, each read
//! gets one labeled edge from every write it could have observed under
//! unsynchronized tracing: the closest writes concurrent with it. Candidates
//! that happen before the read are not materialized, reachability through
//! the happens-before edges already covers them.
//!
//! A race pair with no connecting path (in either direction) is *guaranteed*:
//! no consistent choice of write-read dependencies orders it. A pair joined
//! by a simple path is *maybe*: some choice orders it and the race could be
//! an artifact of inaccurate tracing. For a write/read pair the direct
//! candidate edge between the two is skipped during the search; that edge is
//! the dependency under dispute.

use crate::analyzers::{self, AnalyzerStats, RaceCategory, RacePair, SshbOutput};
use crate::lockset;
use crate::trace::{EventKind, Trace, TraceMeta};
use serde::Serialize;
use std::time::{Duration, Instant};

/// Edge provenance: plain happens-before, or a dependency candidate for the
/// read event named by the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeLabel {
    Hb,
    Wrd { read: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LabeledEdge {
    pub src: u32,
    pub dst: u32,
    pub label: EdgeLabel,
}

impl LabeledEdge {
    pub fn hb(src: u32, dst: u32) -> LabeledEdge {
        LabeledEdge {
            src,
            dst,
            label: EdgeLabel::Hb,
        }
    }

    /// Candidate edge from a write to the read that may depend on it.
    pub fn wrd(src: u32, dst: u32) -> LabeledEdge {
        LabeledEdge {
            src,
            dst,
            label: EdgeLabel::Wrd { read: dst },
        }
    }
}

/// Candidate-count statistics over the reads of one trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WrdStats {
    /// Reads with at least one candidate.
    pub reads_with_candidates: usize,
    /// Mean candidate count over those reads.
    pub avg: f64,
    /// Largest candidate set over all reads.
    pub max: usize,
}

/// Immutable event graph in adjacency-list form.
pub struct DiagGraph {
    n: usize,
    adj: Vec<Vec<LabeledEdge>>,
    wrd_stats: WrdStats,
}

impl DiagGraph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = &LabeledEdge> {
        self.adj.iter().flatten()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn wrd_stats(&self) -> WrdStats {
        self.wrd_stats
    }
}

/// Builds the diagnosis graph for `t` from the phase-1 output.
///
/// Happens-before edges are taken from the pass directly. The candidate
/// edges are recomputed from the per-event clock snapshots so that every
/// read keeps an edge from each of its closest concurrent writes, including
/// writes whose scan window had already closed when the pass ran; the pair
/// search depends on that completeness.
pub fn build_graph(t: &Trace, phase1: &SshbOutput) -> DiagGraph {
    let n = t.len();
    let mut adj: Vec<Vec<LabeledEdge>> = vec![Vec::new(); n];
    for e in &phase1.edges {
        if e.label == EdgeLabel::Hb {
            adj[(e.src - 1) as usize].push(*e);
        }
    }

    let clocks = &phase1.state.clocks;
    // happens-before between two accesses, via the epoch test
    let hb = |a_pos: u32, a_tid: u32, b_pos: u32| -> bool {
        debug_assert!(a_pos < b_pos);
        let a_stamp = clocks.clock(a_pos)[a_tid as usize];
        a_stamp <= clocks.clock(b_pos)[a_tid as usize]
    };

    // Group accesses per variable, in trace order.
    let mut per_var: Vec<(Vec<(u32, u32)>, Vec<(u32, u32)>)> =
        vec![(Vec::new(), Vec::new()); t.var_count()];
    for e in t.events() {
        match e.kind {
            EventKind::Write(v) => per_var[v.0 as usize].0.push((e.pos, e.tid.0)),
            EventKind::Read(v) => per_var[v.0 as usize].1.push((e.pos, e.tid.0)),
            _ => {}
        }
    }

    let mut candidate_counts: Vec<usize> = Vec::new();
    for (writes, reads) in &per_var {
        for &(r_pos, r_tid) in reads {
            // Closest concurrent writes (kept) and closest happened-before
            // writes (counted only); scanning in trace order means a new
            // candidate can only ever supersede earlier ones.
            let mut unsync: Vec<(u32, u32)> = Vec::new();
            let mut sync: Vec<(u32, u32)> = Vec::new();
            for &(w_pos, w_tid) in writes {
                let ordered = if w_pos < r_pos {
                    hb(w_pos, w_tid, r_pos)
                } else {
                    // a write after the read never happens before it
                    false
                };
                if ordered {
                    sync.retain(|&(g_pos, g_tid)| !hb(g_pos, g_tid, w_pos));
                    sync.push((w_pos, w_tid));
                } else {
                    let read_before_write =
                        w_pos > r_pos && hb(r_pos, r_tid, w_pos);
                    if read_before_write {
                        continue;
                    }
                    unsync.retain(|&(g_pos, g_tid)| {
                        g_pos > w_pos || !hb(g_pos, g_tid, w_pos)
                    });
                    unsync.push((w_pos, w_tid));
                }
            }
            for &(w_pos, _) in &unsync {
                adj[(w_pos - 1) as usize].push(LabeledEdge::wrd(w_pos, r_pos));
            }
            let total = unsync.len() + sync.len();
            if total > 0 {
                candidate_counts.push(total);
            }
        }
    }

    let max = candidate_counts.iter().copied().max().unwrap_or(0);
    let wrd_stats = WrdStats {
        reads_with_candidates: candidate_counts.len(),
        avg: if candidate_counts.is_empty() {
            0.0
        } else {
            candidate_counts.iter().sum::<usize>() as f64 / candidate_counts.len() as f64
        },
        max,
    };

    DiagGraph { n, adj, wrd_stats }
}

/// Breadth-first search for a simple path `from -> to` that avoids the edges
/// in `omit`. Returns the node sequence including both endpoints.
///
/// `from` and `to` must be distinct nodes of the graph.
pub fn path_exists(
    g: &DiagGraph,
    from: u32,
    to: u32,
    omit: &[LabeledEdge],
) -> Option<Vec<u32>> {
    assert!(from != to, "path query requires two distinct events");
    assert!(
        from >= 1 && to >= 1 && from as usize <= g.n && to as usize <= g.n,
        "event out of range for this graph"
    );
    let mut pred: Vec<u32> = vec![0; g.n + 1];
    let mut queue = std::collections::VecDeque::new();
    pred[from as usize] = from;
    queue.push_back(from);
    while let Some(node) = queue.pop_front() {
        for edge in &g.adj[(node - 1) as usize] {
            if omit.contains(edge) {
                continue;
            }
            let next = edge.dst;
            if pred[next as usize] != 0 {
                continue;
            }
            pred[next as usize] = node;
            if next == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = pred[cur as usize];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(next);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// No dependency choice can order the pair; the race stands regardless
    /// of tracing accuracy.
    Guaranteed,
    /// Some dependency choice orders the pair; it may be a tracing artifact.
    Maybe,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub pair: RacePair,
    pub verdict: Verdict,
    /// Connecting simple path, for maybe verdicts.
    pub witness: Option<Vec<u32>>,
    /// Set by the lockset filter when both events hold a common mutex.
    pub lockset_fp: bool,
}

/// Classifies one phase-1 race pair against the graph.
pub fn classify_pair(g: &DiagGraph, pair: &RacePair) -> Classification {
    let omit: Vec<LabeledEdge> = match pair.category {
        RaceCategory::WriteRead => vec![LabeledEdge::wrd(pair.first, pair.second)],
        RaceCategory::ReadWrite => vec![LabeledEdge::wrd(pair.second, pair.first)],
        RaceCategory::WriteWrite => Vec::new(),
    };
    let witness = path_exists(g, pair.first, pair.second, &omit)
        .or_else(|| path_exists(g, pair.second, pair.first, &omit));
    Classification {
        pair: *pair,
        verdict: if witness.is_some() {
            Verdict::Maybe
        } else {
            Verdict::Guaranteed
        },
        witness,
        lockset_fp: false,
    }
}

/// Counts per category and verdict, in the `races/guaranteed` presentation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub total: usize,
    pub guaranteed: usize,
    pub ww: usize,
    pub ww_guaranteed: usize,
    pub wr: usize,
    pub wr_guaranteed: usize,
    pub rw: usize,
    pub rw_guaranteed: usize,
}

impl VerdictCounts {
    pub fn from_classifications(races: &[Classification]) -> VerdictCounts {
        let mut c = VerdictCounts::default();
        for r in races {
            let g = r.verdict == Verdict::Guaranteed;
            c.total += 1;
            c.guaranteed += g as usize;
            match r.pair.category {
                RaceCategory::WriteWrite => {
                    c.ww += 1;
                    c.ww_guaranteed += g as usize;
                }
                RaceCategory::WriteRead => {
                    c.wr += 1;
                    c.wr_guaranteed += g as usize;
                }
                RaceCategory::ReadWrite => {
                    c.rw += 1;
                    c.rw_guaranteed += g as usize;
                }
            }
        }
        c
    }
}

/// Full two-phase result for one trace.
pub struct DiagnosisReport {
    pub meta: TraceMeta,
    pub races: Vec<Classification>,
    pub edges: Vec<LabeledEdge>,
    pub analyzer_stats: AnalyzerStats,
    pub wrd_stats: WrdStats,
    pub phase1_time: Duration,
    pub phase2_time: Duration,
    /// Guaranteed races flagged by the lockset filter, when it ran.
    pub lockset_fp_count: Option<usize>,
}

impl DiagnosisReport {
    pub fn counts(&self) -> VerdictCounts {
        VerdictCounts::from_classifications(&self.races)
    }
}

/// Runs both phases over the trace: the extended pass, the graph build, and
/// a classification per reported race.
pub fn diagnose_all(t: &Trace) -> DiagnosisReport {
    diagnose_all_jobs(t, 1)
}

/// [`diagnose_all`] with classification fanned out over `jobs` worker
/// threads. The graph is immutable and pair classifications are independent.
pub fn diagnose_all_jobs(t: &Trace, jobs: usize) -> DiagnosisReport {
    let start = Instant::now();
    let phase1 = analyzers::run_sshb_phase1(t);
    let phase1_time = start.elapsed();

    let start = Instant::now();
    let graph = build_graph(t, &phase1);
    let races: Vec<Classification> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("failed to build worker pool");
        pool.install(|| {
            use rayon::prelude::*;
            phase1
                .races
                .par_iter()
                .map(|p| classify_pair(&graph, p))
                .collect()
        })
    } else {
        phase1.races.iter().map(|p| classify_pair(&graph, p)).collect()
    };
    let phase2_time = start.elapsed();

    DiagnosisReport {
        meta: t.meta(),
        races,
        edges: phase1.edges,
        analyzer_stats: phase1.state.stats,
        wrd_stats: graph.wrd_stats(),
        phase1_time,
        phase2_time,
        lockset_fp_count: None,
    }
}

/// Runs the diagnosis and applies the lockset filter to guaranteed races.
pub fn diagnose_with_lockset(t: &Trace) -> DiagnosisReport {
    let mut report = diagnose_all(t);
    let locks = lockset::compute_locksets(t);
    lockset::lockset_flags(&mut report, &locks);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::run_sshb_phase1;
    use crate::trace::parse_trace;

    const FIG1C: &str = "1,T1,LK,y\n2,T1,WR,x\n3,T2,LK,y\n4,T2,WR,x\n5,T1,UK,y\n6,T2,UK,y";
    const FIG2C: &str = "1,T2,RD,x\n2,T1,WR,y\n3,T1,WR,x\n4,T2,WR,y";
    const FIG3C: &str = "1,T1,WR,y\n2,T1,WR,x\n3,T2,RD,x\n4,T2,WR,y\n5,T3,WR,x";
    const SEC51: &str = "1,T1,WR,x\n2,T2,RD,x\n3,T3,WR,y\n4,T3,WR,x\n5,T2,WR,y";

    fn graph_of(text: &str) -> (crate::trace::Trace, DiagGraph) {
        let t = parse_trace(text).unwrap();
        let phase1 = run_sshb_phase1(&t);
        let g = build_graph(&t, &phase1);
        (t, g)
    }

    fn edge_set(g: &DiagGraph) -> Vec<LabeledEdge> {
        let mut v: Vec<LabeledEdge> = g.edges().copied().collect();
        v.sort_by_key(|e| (e.src, e.dst));
        v
    }

    #[test]
    fn graph_for_reordered_two_thread_trace() {
        let (_, g) = graph_of(FIG2C);
        assert_eq!(g.node_count(), 4);
        assert_eq!(
            edge_set(&g),
            vec![
                LabeledEdge::hb(1, 4),
                LabeledEdge::hb(2, 3),
                LabeledEdge::wrd(3, 1),
            ]
        );
    }

    #[test]
    fn graph_for_reordered_three_thread_trace() {
        let (_, g) = graph_of(FIG3C);
        assert_eq!(g.node_count(), 5);
        assert_eq!(
            edge_set(&g),
            vec![
                LabeledEdge::hb(1, 2),
                LabeledEdge::wrd(2, 3),
                LabeledEdge::hb(3, 4),
                LabeledEdge::wrd(5, 3),
            ]
        );
        assert_eq!(g.wrd_stats().max, 2);
    }

    #[test]
    fn empty_trace_builds_empty_graph() {
        let (_, g) = graph_of("");
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn path_search_follows_candidate_edges() {
        let (_, g) = graph_of(FIG2C);
        let p = path_exists(&g, 2, 4, &[]).unwrap();
        assert_eq!(p, vec![2, 3, 1, 4]);
        assert!(path_exists(&g, 4, 2, &[]).is_none());
    }

    #[test]
    fn path_search_respects_omitted_edges() {
        let (_, g) = graph_of(FIG3C);
        assert!(path_exists(&g, 2, 5, &[]).is_none());
        assert!(path_exists(&g, 5, 2, &[]).is_none());
        // Without omission the direct candidate edge connects 5 -> 3.
        assert!(path_exists(&g, 5, 3, &[]).is_some());
        assert!(path_exists(&g, 5, 3, &[LabeledEdge::wrd(5, 3)]).is_none());
    }

    #[test]
    #[should_panic(expected = "distinct events")]
    fn path_to_self_is_rejected() {
        let (_, g) = graph_of(FIG2C);
        let _ = path_exists(&g, 1, 1, &[]);
    }

    #[test]
    fn worked_example_verdicts() {
        let t = parse_trace(SEC51).unwrap();
        let report = diagnose_all(&t);
        let verdicts: Vec<(u32, u32, Verdict)> = report
            .races
            .iter()
            .map(|c| (c.pair.first, c.pair.second, c.verdict))
            .collect();
        assert!(verdicts.contains(&(1, 2, Verdict::Guaranteed)));
        assert!(verdicts.contains(&(2, 4, Verdict::Guaranteed)));
        assert!(verdicts.contains(&(3, 5, Verdict::Maybe)));
        let maybe = report
            .races
            .iter()
            .find(|c| c.pair.first == 3)
            .unwrap();
        assert_eq!(maybe.witness.as_deref(), Some(&[3, 4, 2, 5][..]));
    }

    #[test]
    fn reordered_trace_verdicts() {
        let t = parse_trace(FIG3C).unwrap();
        let report = diagnose_all(&t);
        for c in &report.races {
            let expected = match (c.pair.first, c.pair.second) {
                (1, 4) => Verdict::Maybe,
                _ => Verdict::Guaranteed,
            };
            assert_eq!(c.verdict, expected, "pair {:?}", c.pair);
        }
        let t = parse_trace(FIG2C).unwrap();
        let report = diagnose_all(&t);
        let ww = report
            .races
            .iter()
            .find(|c| c.pair.category == RaceCategory::WriteWrite)
            .unwrap();
        assert_eq!(ww.verdict, Verdict::Maybe);
        assert_eq!(ww.witness.as_deref(), Some(&[2, 3, 1, 4][..]));
    }

    #[test]
    fn lock_only_race_is_guaranteed_without_lockset_filter() {
        let t = parse_trace(FIG1C).unwrap();
        let report = diagnose_all(&t);
        assert_eq!(report.races.len(), 1);
        assert_eq!(report.races[0].verdict, Verdict::Guaranteed);
        assert!(!report.races[0].lockset_fp);
    }

    #[test]
    fn jobs_variant_matches_sequential() {
        let t = parse_trace(FIG3C).unwrap();
        let seq = diagnose_all(&t);
        let par = diagnose_all_jobs(&t, 4);
        let v1: Vec<_> = seq.races.iter().map(|c| (c.pair, c.verdict)).collect();
        let v2: Vec<_> = par.races.iter().map(|c| (c.pair, c.verdict)).collect();
        assert_eq!(v1, v2);
    }
}
