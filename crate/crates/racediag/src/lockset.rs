//! Per-thread held-mutex tracking and the false-positive filter for
//! guaranteed races.
//!
//! A thread's lockset at an event is a pure function of that thread's own
//! acquire/release subsequence, so it is immune to the cross-thread
//! reordering an inaccurate tracer can introduce. A guaranteed race whose
//! two events hold a common mutex is therefore mutually exclusive in every
//! real execution and gets flagged as a tracing artifact.

use crate::diagnosis::{DiagnosisReport, Verdict};
use crate::trace::{EventKind, LockId, Trace};

/// Lockset snapshot per event, plus warnings for malformed release patterns.
pub struct LocksetAnnotation {
    /// `per_event[pos - 1]` = locks the event's thread holds at that event
    /// (including the lock just taken by an acquire, excluding the one just
    /// dropped by a release), sorted.
    pub per_event: Vec<Vec<LockId>>,
    pub warnings: Vec<String>,
}

impl LocksetAnnotation {
    pub fn held_at(&self, pos: u32) -> &[LockId] {
        &self.per_event[(pos - 1) as usize]
    }
}

/// Single forward pass annotating every event with its thread's held set.
/// A release of an unheld lock is skipped with a warning.
pub fn compute_locksets(t: &Trace) -> LocksetAnnotation {
    let mut held: Vec<Vec<LockId>> = vec![Vec::new(); t.thread_count()];
    let mut per_event = Vec::with_capacity(t.len());
    let mut warnings = Vec::new();
    for e in t.events() {
        let tid = e.tid.0 as usize;
        match e.kind {
            EventKind::Acquire(l) => {
                if !held[tid].contains(&l) {
                    held[tid].push(l);
                    held[tid].sort_unstable();
                }
            }
            EventKind::Release(l) => {
                if let Some(i) = held[tid].iter().position(|&h| h == l) {
                    held[tid].remove(i);
                } else {
                    warnings.push(format!(
                        "release of unheld lock {} by thread {} at {} skipped",
                        t.lock_name(l),
                        t.thread_name(e.tid),
                        e.pos
                    ));
                }
            }
            _ => {}
        }
        per_event.push(held[tid].clone());
    }
    LocksetAnnotation {
        per_event,
        warnings,
    }
}

fn intersects(a: &[LockId], b: &[LockId]) -> bool {
    a.iter().any(|l| b.contains(l))
}

/// Flags every guaranteed classification whose two events hold a common
/// mutex; maybe verdicts are untouched. Flagged races stay in the report so
/// the caller decides what to hide.
pub fn lockset_flags(report: &mut DiagnosisReport, locksets: &LocksetAnnotation) {
    let mut fps = 0;
    for c in &mut report.races {
        if c.verdict == Verdict::Guaranteed
            && intersects(
                locksets.held_at(c.pair.first),
                locksets.held_at(c.pair.second),
            )
        {
            c.lockset_fp = true;
            fps += 1;
        }
    }
    report.lockset_fp_count = Some(fps);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnosis::diagnose_all;
    use crate::trace::parse_trace;

    const FIG1C: &str = "1,T1,LK,y\n2,T1,WR,x\n3,T2,LK,y\n4,T2,WR,x\n5,T1,UK,y\n6,T2,UK,y";
    const APP_A11: &str = "1,T1,LK,y1\n2,T1,LK,y2\n3,T1,WR,x\n4,T1,UK,y2\n5,T1,UK,y1\n6,T3,LK,y2\n7,T3,WR,x\n8,T3,UK,y2\n9,T2,LK,y1\n10,T2,RD,x\n11,T2,UK,y1";

    fn names(t: &crate::trace::Trace, held: &[LockId]) -> Vec<String> {
        held.iter().map(|&l| t.lock_name(l).to_string()).collect()
    }

    #[test]
    fn both_writes_hold_the_mutex_in_reordered_trace() {
        let t = parse_trace(FIG1C).unwrap();
        let ls = compute_locksets(&t);
        assert_eq!(names(&t, ls.held_at(2)), vec!["y"]);
        assert_eq!(names(&t, ls.held_at(4)), vec!["y"]);
        assert!(ls.held_at(5).is_empty());
        assert!(ls.held_at(6).is_empty());
        assert!(ls.warnings.is_empty());
    }

    #[test]
    fn lock_free_trace_has_empty_sets() {
        let t = parse_trace("1,T1,WR,x\n2,T2,RD,x").unwrap();
        let ls = compute_locksets(&t);
        assert!(ls.per_event.iter().all(Vec::is_empty));
    }

    #[test]
    fn nested_acquisition_snapshot() {
        let t = parse_trace(APP_A11).unwrap();
        let ls = compute_locksets(&t);
        assert_eq!(names(&t, ls.held_at(3)), vec!["y1", "y2"]);
        assert_eq!(names(&t, ls.held_at(7)), vec!["y2"]);
        assert_eq!(names(&t, ls.held_at(10)), vec!["y1"]);
    }

    #[test]
    fn unheld_release_warns_and_continues() {
        let t = parse_trace("1,T1,UK,y\n2,T1,WR,x").unwrap();
        let ls = compute_locksets(&t);
        assert_eq!(ls.warnings.len(), 1);
        assert!(ls.held_at(2).is_empty());
    }

    #[test]
    fn guaranteed_race_with_common_mutex_is_flagged() {
        let t = parse_trace(FIG1C).unwrap();
        let mut report = diagnose_all(&t);
        let ls = compute_locksets(&t);
        lockset_flags(&mut report, &ls);
        assert_eq!(report.races.len(), 1);
        assert_eq!(report.races[0].verdict, Verdict::Guaranteed);
        assert!(report.races[0].lockset_fp);
        assert_eq!(report.lockset_fp_count, Some(1));
    }

    #[test]
    fn disjoint_or_one_sided_locksets_stay_unflagged() {
        // Same shape but the second thread uses another mutex.
        let t = parse_trace("1,T1,LK,y\n2,T1,WR,x\n3,T2,LK,z\n4,T2,WR,x\n5,T1,UK,y\n6,T2,UK,z")
            .unwrap();
        let mut report = diagnose_all(&t);
        let ls = compute_locksets(&t);
        lockset_flags(&mut report, &ls);
        assert!(report.races.iter().all(|c| !c.lockset_fp));

        // Only one side holds the mutex.
        let t = parse_trace("1,T1,LK,y\n2,T1,WR,x\n3,T1,UK,y\n4,T2,WR,x").unwrap();
        let mut report = diagnose_all(&t);
        let ls = compute_locksets(&t);
        lockset_flags(&mut report, &ls);
        let ww = &report.races[0];
        assert!(!ww.lockset_fp);
    }
}
