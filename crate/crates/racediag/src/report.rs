//! Report documents: the stable machine-readable (JSON) and human-readable
//! renderings of analysis results.

use crate::analyzers::{FastTrackReport, RaceCategory, RacePair};
use crate::diagnosis::{Classification, DiagnosisReport, Verdict, VerdictCounts};
use crate::trace::{Trace, TraceMeta};
use serde::Serialize;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Duration;

pub const TOOL_NAME: &str = "racediag";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One event as it appears in reports.
#[derive(Debug, Clone, Serialize)]
pub struct EventRef {
    pub pos: u32,
    pub thread: String,
    pub op: String,
    pub target: String,
    pub loc: String,
}

impl EventRef {
    pub fn new(t: &Trace, pos: u32) -> EventRef {
        let e = t.event(pos);
        EventRef {
            pos,
            thread: t.thread_name(e.tid).to_string(),
            op: e.kind.op_code().to_string(),
            target: t.target_name(e).to_string(),
            loc: t.loc_or_default(e),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RaceEntry {
    pub first: EventRef,
    pub second: EventRef,
    pub category: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lockset_fp: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
}

impl RaceEntry {
    pub fn from_pair(t: &Trace, p: &RacePair) -> RaceEntry {
        RaceEntry {
            first: EventRef::new(t, p.first),
            second: EventRef::new(t, p.second),
            category: p.category.short().to_string(),
            verdict: None,
            lockset_fp: None,
            witness: None,
            oracle: None,
        }
    }

    pub fn from_classification(t: &Trace, c: &Classification) -> RaceEntry {
        RaceEntry {
            first: EventRef::new(t, c.pair.first),
            second: EventRef::new(t, c.pair.second),
            category: c.pair.category.short().to_string(),
            verdict: Some(
                match c.verdict {
                    Verdict::Guaranteed => "guaranteed",
                    Verdict::Maybe => "maybe",
                }
                .to_string(),
            ),
            lockset_fp: Some(c.lockset_fp),
            witness: c.witness.clone(),
            oracle: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RaceCounts {
    pub total: usize,
    pub ww: usize,
    pub wr: usize,
    pub rw: usize,
}

impl RaceCounts {
    pub fn from_pairs(pairs: &[RacePair]) -> RaceCounts {
        let mut c = RaceCounts::default();
        for p in pairs {
            c.total += 1;
            match p.category {
                RaceCategory::WriteWrite => c.ww += 1,
                RaceCategory::WriteRead => c.wr += 1,
                RaceCategory::ReadWrite => c.rw += 1,
            }
        }
        c
    }
}

/// Result block of one streaming analyzer.
#[derive(Debug, Clone, Serialize)]
pub struct AlgoSection {
    pub algo: String,
    pub counts: RaceCounts,
    pub races: Vec<RaceEntry>,
    pub time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sound_up_to_first_race_only: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
}

/// Diagnosis (two-phase) result block.
#[derive(Debug, Clone, Serialize)]
pub struct DiagSection {
    pub counts: VerdictCounts,
    /// `races/guaranteed`, the presentation used in comparisons.
    pub races_over_guaranteed: String,
    pub races: Vec<RaceEntry>,
    pub edges: usize,
    pub wrd_avg: f64,
    pub wrd_max: usize,
    pub reads_with_candidates: usize,
    pub phase1_s: f64,
    pub phase2_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lockset_fp_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cw: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cr: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSection {
    pub checked: usize,
    pub agreed: usize,
    pub agreement_pct: f64,
}

/// Top-level report document with a stable key set.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub trace: TraceMeta,
    pub dedup_by_location: bool,
    pub algorithms: Vec<AlgoSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<DiagSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

impl ReportDocument {
    pub fn new(command: &str, input: Option<String>, meta: TraceMeta) -> ReportDocument {
        ReportDocument {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            input,
            trace: meta,
            dedup_by_location: false,
            algorithms: Vec::new(),
            diagnosis: None,
            oracle: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

pub fn seconds(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Keeps the first pair per unordered location pair.
pub fn dedup_pairs_by_location(t: &Trace, pairs: &[RacePair]) -> Vec<RacePair> {
    let mut seen = HashSet::new();
    pairs
        .iter()
        .filter(|p| seen.insert(p.loc_pair(t)))
        .copied()
        .collect()
}

/// Keeps the first classification per unordered location pair.
pub fn dedup_classifications_by_location(
    t: &Trace,
    races: &[Classification],
) -> Vec<Classification> {
    let mut seen = HashSet::new();
    races
        .iter()
        .filter(|c| seen.insert(c.pair.loc_pair(t)))
        .cloned()
        .collect()
}

pub fn algo_section(
    t: &Trace,
    algo: &str,
    pairs: &[RacePair],
    time: Duration,
    edges: Option<usize>,
) -> AlgoSection {
    AlgoSection {
        algo: algo.to_string(),
        counts: RaceCounts::from_pairs(pairs),
        races: pairs.iter().map(|p| RaceEntry::from_pair(t, p)).collect(),
        time_s: seconds(time),
        sound_up_to_first_race_only: None,
        edges,
    }
}

pub fn fasttrack_section(t: &Trace, rep: &FastTrackReport, time: Duration) -> AlgoSection {
    let pairs: Vec<RacePair> = rep
        .occurrences
        .iter()
        .map(|o| RacePair::new(t, o.partner_pos, o.pos))
        .collect();
    AlgoSection {
        algo: "fasttrack".to_string(),
        counts: RaceCounts::from_pairs(&pairs),
        races: pairs.iter().map(|p| RaceEntry::from_pair(t, p)).collect(),
        time_s: seconds(time),
        sound_up_to_first_race_only: Some(rep.sound_up_to_first_race_only),
        edges: None,
    }
}

pub fn diag_section(t: &Trace, rep: &DiagnosisReport, races: &[Classification]) -> DiagSection {
    let counts = VerdictCounts::from_classifications(races);
    DiagSection {
        counts,
        races_over_guaranteed: format!("{}/{}", counts.total, counts.guaranteed),
        races: races
            .iter()
            .map(|c| RaceEntry::from_classification(t, c))
            .collect(),
        edges: rep.edges.len(),
        wrd_avg: rep.wrd_stats.avg,
        wrd_max: rep.wrd_stats.max,
        reads_with_candidates: rep.wrd_stats.reads_with_candidates,
        phase1_s: seconds(rep.phase1_time),
        phase2_s: seconds(rep.phase2_time),
        lockset_fp_count: rep.lockset_fp_count,
        max_cw: Some(rep.analyzer_stats.max_cw),
        max_cr: Some(rep.analyzer_stats.max_cr),
    }
}

fn op_short(op: &str) -> &'static str {
    match op {
        "RD" => "r",
        "WR" => "w",
        "LK" => "acq",
        "UK" => "rel",
        _ => "?",
    }
}

fn race_line(out: &mut String, r: &RaceEntry) {
    let verdict = match &r.verdict {
        Some(v) => {
            let mut s = format!("  {v}");
            if r.lockset_fp == Some(true) {
                s.push_str(" [lockset FP]");
            }
            s
        }
        None => String::new(),
    };
    let _ = writeln!(
        out,
        "  {}  {}({})@{} {} -- {}({})@{} {}{}",
        r.category,
        op_short(&r.first.op),
        r.first.target,
        r.first.pos,
        r.first.thread,
        op_short(&r.second.op),
        r.second.target,
        r.second.pos,
        r.second.thread,
        verdict
    );
    if let Some(w) = &r.witness {
        let path: Vec<String> = w.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "        path: {}", path.join(" -> "));
    }
}

/// Plain-text rendering of a report document.
pub fn render_text(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", doc.tool, doc.version, doc.command);
    let m = &doc.trace;
    let _ = writeln!(
        out,
        "trace: {}  events={} threads={} vars={} locks={} reads={} writes={} syncs={}",
        doc.input.as_deref().unwrap_or("<stdin>"),
        m.events,
        m.threads,
        m.vars,
        m.locks,
        m.reads,
        m.writes,
        m.syncs
    );
    if doc.dedup_by_location {
        let _ = writeln!(out, "(race lists deduplicated by code-location pair)");
    }
    for a in &doc.algorithms {
        let _ = writeln!(
            out,
            "\n{}: {} races (ww={} wr={} rw={})  [{:.3}s]{}",
            a.algo,
            a.counts.total,
            a.counts.ww,
            a.counts.wr,
            a.counts.rw,
            a.time_s,
            match a.edges {
                Some(e) => format!("  edges={e}"),
                None => String::new(),
            }
        );
        if a.sound_up_to_first_race_only == Some(true) {
            let _ = writeln!(out, "note: occurrences past the first may be false positives");
        }
        for r in &a.races {
            race_line(&mut out, r);
        }
    }
    if let Some(d) = &doc.diagnosis {
        let _ = writeln!(
            out,
            "\ndiagnosis: races/guaranteed = {}  (ww {}/{}, wr {}/{}, rw {}/{})",
            d.races_over_guaranteed,
            d.counts.ww,
            d.counts.ww_guaranteed,
            d.counts.wr,
            d.counts.wr_guaranteed,
            d.counts.rw,
            d.counts.rw_guaranteed
        );
        let _ = writeln!(
            out,
            "phase1+2 (s): {:.3}+{:.3}  edges={}  wrd-candidates avg={:.2} max={} over {} reads",
            d.phase1_s, d.phase2_s, d.edges, d.wrd_avg, d.wrd_max, d.reads_with_candidates
        );
        if let Some(fp) = d.lockset_fp_count {
            let _ = writeln!(
                out,
                "lockset filter: {fp} guaranteed race(s) flagged as release-acquire artifacts"
            );
        }
        for r in &d.races {
            race_line(&mut out, r);
        }
    }
    if let Some(o) = &doc.oracle {
        let _ = writeln!(
            out,
            "\noracle check: {}/{} verdicts agree ({:.1}%)",
            o.agreed, o.checked, o.agreement_pct
        );
    }
    out
}

/// Side-by-side comparison table for the `compare` command.
pub fn render_compare_text(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} compare", doc.tool, doc.version);
    let m = &doc.trace;
    let _ = writeln!(
        out,
        "trace: {}  events={} threads={} vars={} locks={}",
        doc.input.as_deref().unwrap_or("<stdin>"),
        m.events,
        m.threads,
        m.vars,
        m.locks
    );
    let hb = doc.algorithms.iter().find(|a| a.algo == "hb");
    let shb = doc.algorithms.iter().find(|a| a.algo == "shb");
    let d = doc.diagnosis.as_ref();
    let cell = |c: Option<&AlgoSection>, f: &dyn Fn(&RaceCounts) -> usize| -> String {
        c.map(|a| f(&a.counts).to_string()).unwrap_or_default()
    };
    let dcell = |f: &dyn Fn(&VerdictCounts) -> (usize, usize)| -> String {
        d.map(|s| {
            let (t, g) = f(&s.counts);
            format!("{t}/{g}")
        })
        .unwrap_or_default()
    };
    let rows: Vec<(&str, String, String, String)> = vec![
        (
            "races",
            cell(hb, &|c| c.total),
            cell(shb, &|c| c.total),
            dcell(&|c| (c.total, c.guaranteed)),
        ),
        (
            "read-write",
            cell(hb, &|c| c.rw),
            cell(shb, &|c| c.rw),
            dcell(&|c| (c.rw, c.rw_guaranteed)),
        ),
        (
            "write-read",
            cell(hb, &|c| c.wr),
            cell(shb, &|c| c.wr),
            dcell(&|c| (c.wr, c.wr_guaranteed)),
        ),
        (
            "write-write",
            cell(hb, &|c| c.ww),
            cell(shb, &|c| c.ww),
            dcell(&|c| (c.ww, c.ww_guaranteed)),
        ),
        (
            "time (s)",
            hb.map(|a| format!("{:.3}", a.time_s)).unwrap_or_default(),
            shb.map(|a| format!("{:.3}", a.time_s)).unwrap_or_default(),
            d.map(|s| format!("{:.3}+{:.3}", s.phase1_s, s.phase2_s))
                .unwrap_or_default(),
        ),
        (
            "#w(r) avg/max",
            String::new(),
            String::new(),
            d.map(|s| format!("{:.2}/{}", s.wrd_avg, s.wrd_max))
                .unwrap_or_default(),
        ),
    ];
    let _ = writeln!(
        out,
        "\n{:<14} {:>10} {:>10} {:>16}",
        "", "hb", "shb", "sshb (X/G)"
    );
    for (name, a, b, c) in rows {
        let _ = writeln!(out, "{name:<14} {a:>10} {b:>10} {c:>16}");
    }
    if let Some(s) = d {
        if let Some(fp) = s.lockset_fp_count {
            let _ = writeln!(out, "{:<14} {:>10} {:>10} {:>16}", "lockset FPs", "", "", fp);
        }
    }
    out
}
