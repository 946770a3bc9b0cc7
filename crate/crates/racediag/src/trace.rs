//! Event/trace data model, the text file format, and well-formedness checks.
//!
//! A trace file is UTF-8 text with one event per line:
//!
//! ```text
//! pos,tid,OP,target[,loc[,gan]]
//! ```
//!
//! where `OP` is one of `RD`, `WR` (read/write of a shared variable), `LK`,
//! `UK` (acquire/release of a mutex). Lines starting with `#` are comments.
//! `pos` must run contiguously from 1; a mismatch is a parse error so that
//! truncated or re-stitched files are caught early.
//!
//! Thread, variable and lock names are interned to dense indices at parse
//! time; the fixed-width vector clocks of the analyzers depend on dense
//! thread indices. Variables and locks live in disjoint namespaces: a name
//! may not appear as both.

use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Dense thread index, assigned in order of first appearance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ThreadId(pub u32);

/// Dense shared-variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub u32);

/// Dense mutex index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LockId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    Read(VarId),
    Write(VarId),
    Acquire(LockId),
    Release(LockId),
}

impl EventKind {
    pub fn is_read(&self) -> bool {
        matches!(self, EventKind::Read(_))
    }

    pub fn is_write(&self) -> bool {
        matches!(self, EventKind::Write(_))
    }

    pub fn is_access(&self) -> bool {
        self.is_read() || self.is_write()
    }

    /// Variable accessed, for read/write events.
    pub fn var(&self) -> Option<VarId> {
        match self {
            EventKind::Read(v) | EventKind::Write(v) => Some(*v),
            _ => None,
        }
    }

    /// Lock touched, for acquire/release events.
    pub fn lock(&self) -> Option<LockId> {
        match self {
            EventKind::Acquire(l) | EventKind::Release(l) => Some(*l),
            _ => None,
        }
    }

    pub fn op_code(&self) -> &'static str {
        match self {
            EventKind::Read(_) => "RD",
            EventKind::Write(_) => "WR",
            EventKind::Acquire(_) => "LK",
            EventKind::Release(_) => "UK",
        }
    }
}

/// One recorded operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    /// 1-based trace position; `events[m].pos == m + 1` always holds.
    pub pos: u32,
    pub tid: ThreadId,
    pub kind: EventKind,
    /// Source location, e.g. `File.java:339:237`. Optional in files.
    pub loc: Option<String>,
    /// Global access number, an optional tracer-assigned ordinal.
    pub gan: Option<u64>,
}

/// Summary counts for a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TraceMeta {
    pub events: usize,
    pub threads: usize,
    pub vars: usize,
    pub locks: usize,
    pub reads: usize,
    pub writes: usize,
    pub syncs: usize,
}

/// Immutable ordered event list plus interning tables.
///
/// Traces are never mutated after construction and are safe to share
/// read-only across concurrent analyses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    events: Vec<Event>,
    thread_names: Vec<String>,
    var_names: Vec<String>,
    lock_names: Vec<String>,
}

impl Trace {
    /// Builds a trace from pre-interned parts. `events[m].pos` must be `m+1`
    /// and all indices must be in range of the name tables.
    pub fn from_parts(
        events: Vec<Event>,
        thread_names: Vec<String>,
        var_names: Vec<String>,
        lock_names: Vec<String>,
    ) -> Self {
        for (m, e) in events.iter().enumerate() {
            debug_assert_eq!(e.pos as usize, m + 1, "event positions must be contiguous");
            debug_assert!((e.tid.0 as usize) < thread_names.len());
        }
        Trace {
            events,
            thread_names,
            var_names,
            lock_names,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Event at 1-based position `pos`.
    pub fn event(&self, pos: u32) -> &Event {
        &self.events[(pos - 1) as usize]
    }

    pub fn thread_count(&self) -> usize {
        self.thread_names.len()
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn lock_count(&self) -> usize {
        self.lock_names.len()
    }

    pub fn thread_name(&self, t: ThreadId) -> &str {
        &self.thread_names[t.0 as usize]
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v.0 as usize]
    }

    pub fn lock_name(&self, l: LockId) -> &str {
        &self.lock_names[l.0 as usize]
    }

    /// Name of the event's target (variable or lock).
    pub fn target_name(&self, e: &Event) -> &str {
        match e.kind {
            EventKind::Read(v) | EventKind::Write(v) => self.var_name(v),
            EventKind::Acquire(l) | EventKind::Release(l) => self.lock_name(l),
        }
    }

    /// Source location of an event, defaulting to `"tid:pos"` so that
    /// location-based dedup stays well defined when locations were not
    /// traced.
    pub fn loc_or_default(&self, e: &Event) -> String {
        match &e.loc {
            Some(l) => l.clone(),
            None => format!("{}:{}", self.thread_name(e.tid), e.pos),
        }
    }

    pub fn meta(&self) -> TraceMeta {
        let mut m = TraceMeta {
            events: self.events.len(),
            threads: self.thread_names.len(),
            vars: self.var_names.len(),
            locks: self.lock_names.len(),
            ..TraceMeta::default()
        };
        for e in &self.events {
            match e.kind {
                EventKind::Read(_) => m.reads += 1,
                EventKind::Write(_) => m.writes += 1,
                EventKind::Acquire(_) | EventKind::Release(_) => m.syncs += 1,
            }
        }
        m
    }

    /// Short human form like `w(x)@4` or `acq(y)@1`.
    pub fn describe(&self, e: &Event) -> String {
        let body = match e.kind {
            EventKind::Read(v) => format!("r({})", self.var_name(v)),
            EventKind::Write(v) => format!("w({})", self.var_name(v)),
            EventKind::Acquire(l) => format!("acq({})", self.lock_name(l)),
            EventKind::Release(l) => format!("rel({})", self.lock_name(l)),
        };
        format!("{}@{}", body, e.pos)
    }
}

/// How strictly release-acquire structure is checked.
///
/// `Strict` models accurate release-acquire tracing: critical sections on one
/// lock never overlap across threads. `Lenient` only requires per-thread
/// acquire/release matching and admits the overlapping sections produced by
/// tracers that record lock events late. Every `Strict`-valid trace is
/// `Lenient`-valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValidityLevel {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// Acquire with no later release of the same lock in the same thread.
    DanglingAcquire,
    /// Release of a lock the thread does not hold.
    UnmatchedRelease,
    /// Thread re-acquires a lock it already holds.
    ReentrantAcquire,
    /// Acquire of a lock currently held by another thread (Strict only).
    OverlappingAcquire,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub pos: u32,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub level: ValidityLevel,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown op code `{op}`")]
    UnknownOp { line: usize, op: String },
    #[error("line {line}: expected pos {expected}, found {found} (positions must be contiguous from 1)")]
    NonContiguousPos { line: usize, expected: u32, found: u64 },
    #[error("line {line}: `{name}` already used as a {prior}; variable and lock names must be disjoint")]
    NameClash { line: usize, name: String, prior: &'static str },
}

#[derive(Default)]
struct Interner {
    map: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.map.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.map.insert(name.to_string(), i);
        self.names.push(name.to_string());
        i
    }

    fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }
}

/// Parses the canonical text format. Events must appear with contiguous
/// positions 1..n; comment and blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    let mut threads = Interner::default();
    let mut vars = Interner::default();
    let mut locks = Interner::default();
    let mut events = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 || fields.len() > 6 {
            return Err(ParseError::Syntax {
                line: line_no,
                msg: format!("expected 4..6 comma-separated fields, found {}", fields.len()),
            });
        }
        let pos: u64 = fields[0].trim().parse().map_err(|_| ParseError::Syntax {
            line: line_no,
            msg: format!("invalid position `{}`", fields[0]),
        })?;
        let expected = events.len() as u32 + 1;
        if pos != expected as u64 {
            return Err(ParseError::NonContiguousPos {
                line: line_no,
                expected,
                found: pos,
            });
        }
        let tid_name = fields[1].trim();
        if tid_name.is_empty() {
            return Err(ParseError::Syntax {
                line: line_no,
                msg: "empty thread id".into(),
            });
        }
        let op = fields[2].trim();
        let target = fields[3].trim();
        if target.is_empty() {
            return Err(ParseError::Syntax {
                line: line_no,
                msg: "empty target".into(),
            });
        }
        let kind = match op {
            "RD" | "WR" => {
                if locks.contains(target) {
                    return Err(ParseError::NameClash {
                        line: line_no,
                        name: target.to_string(),
                        prior: "lock",
                    });
                }
                let v = VarId(vars.intern(target));
                if op == "RD" {
                    EventKind::Read(v)
                } else {
                    EventKind::Write(v)
                }
            }
            "LK" | "UK" => {
                if vars.contains(target) {
                    return Err(ParseError::NameClash {
                        line: line_no,
                        name: target.to_string(),
                        prior: "variable",
                    });
                }
                let l = LockId(locks.intern(target));
                if op == "LK" {
                    EventKind::Acquire(l)
                } else {
                    EventKind::Release(l)
                }
            }
            other => {
                return Err(ParseError::UnknownOp {
                    line: line_no,
                    op: other.to_string(),
                })
            }
        };
        let loc = match fields.get(4) {
            Some(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
            _ => None,
        };
        let gan = match fields.get(5) {
            Some(s) => Some(s.trim().parse::<u64>().map_err(|_| ParseError::Syntax {
                line: line_no,
                msg: format!("invalid global access number `{s}`"),
            })?),
            None => None,
        };
        events.push(Event {
            pos: expected,
            tid: ThreadId(threads.intern(tid_name)),
            kind,
            loc,
            gan,
        });
    }

    Ok(Trace {
        events,
        thread_names: threads.names,
        var_names: vars.names,
        lock_names: locks.names,
    })
}

/// Canonical serialization; `parse_trace(serialize_trace(t)) == t`.
pub fn serialize_trace(t: &Trace) -> String {
    let mut out = String::new();
    for e in t.events() {
        out.push_str(&format!(
            "{},{},{},{}",
            e.pos,
            t.thread_name(e.tid),
            e.kind.op_code(),
            t.target_name(e)
        ));
        match (&e.loc, &e.gan) {
            (Some(loc), Some(gan)) => out.push_str(&format!(",{loc},{gan}")),
            (Some(loc), None) => out.push_str(&format!(",{loc}")),
            // gan without loc still needs the loc column filled in.
            (None, Some(gan)) => out.push_str(&format!(",{},{gan}", t.loc_or_default(e))),
            (None, None) => {}
        }
        out.push('\n');
    }
    out
}

/// Checks acquire/release structure at the requested level. Violations are
/// report content, not errors.
pub fn validate(t: &Trace, level: ValidityLevel) -> ValidationReport {
    let mut violations = Vec::new();
    // held[tid] = (lock, acquire pos) pairs currently open in that thread
    let mut held: Vec<Vec<(u32, u32)>> = vec![Vec::new(); t.thread_count()];
    // owner[lock] = thread currently inside a critical section on it
    let mut owner: HashMap<u32, u32> = HashMap::new();

    for e in t.events() {
        let tid = e.tid.0 as usize;
        match e.kind {
            EventKind::Acquire(l) => {
                if held[tid].iter().any(|&(h, _)| h == l.0) {
                    violations.push(Violation {
                        pos: e.pos,
                        kind: ViolationKind::ReentrantAcquire,
                        message: format!(
                            "thread {} re-acquires lock {} it already holds",
                            t.thread_name(e.tid),
                            t.lock_name(l)
                        ),
                    });
                    continue;
                }
                if level == ValidityLevel::Strict {
                    if let Some(&other) = owner.get(&l.0) {
                        if other != e.tid.0 {
                            violations.push(Violation {
                                pos: e.pos,
                                kind: ViolationKind::OverlappingAcquire,
                                message: format!(
                                    "thread {} acquires lock {} while thread {} holds it",
                                    t.thread_name(e.tid),
                                    t.lock_name(l),
                                    t.thread_name(ThreadId(other))
                                ),
                            });
                        }
                    }
                }
                held[tid].push((l.0, e.pos));
                owner.insert(l.0, e.tid.0);
            }
            EventKind::Release(l) => {
                if let Some(i) = held[tid].iter().position(|&(h, _)| h == l.0) {
                    held[tid].remove(i);
                    if owner.get(&l.0) == Some(&e.tid.0) {
                        owner.remove(&l.0);
                    }
                } else {
                    violations.push(Violation {
                        pos: e.pos,
                        kind: ViolationKind::UnmatchedRelease,
                        message: format!(
                            "thread {} releases lock {} it does not hold",
                            t.thread_name(e.tid),
                            t.lock_name(l)
                        ),
                    });
                }
            }
            _ => {}
        }
    }

    // Whatever is still open at the end never saw its matching release.
    for (tid, open) in held.iter().enumerate() {
        for &(lock, pos) in open {
            violations.push(Violation {
                pos,
                kind: ViolationKind::DanglingAcquire,
                message: format!(
                    "acquire of lock {} by thread {} has no matching release",
                    t.lock_name(LockId(lock)),
                    t.thread_name(ThreadId(tid as u32))
                ),
            });
        }
    }

    violations.sort_by_key(|v| v.pos);
    ValidationReport { level, violations }
}

/// Appends a synthetic release at the trace end for every dangling acquire,
/// the standard repair for prematurely terminated runs.
pub fn insert_dummy_releases(t: &Trace) -> Trace {
    let mut held: Vec<Vec<LockId>> = vec![Vec::new(); t.thread_count()];
    for e in t.events() {
        let tid = e.tid.0 as usize;
        match e.kind {
            EventKind::Acquire(l) => {
                if !held[tid].contains(&l) {
                    held[tid].push(l);
                }
            }
            EventKind::Release(l) => {
                if let Some(i) = held[tid].iter().position(|&h| h == l) {
                    held[tid].remove(i);
                }
            }
            _ => {}
        }
    }
    let mut events = t.events.clone();
    let mut next = events.len() as u32 + 1;
    for (tid, locks) in held.iter().enumerate() {
        // release in reverse acquisition order
        for &l in locks.iter().rev() {
            events.push(Event {
                pos: next,
                tid: ThreadId(tid as u32),
                kind: EventKind::Release(l),
                loc: None,
                gan: None,
            });
            next += 1;
        }
    }
    Trace {
        events,
        thread_names: t.thread_names.clone(),
        var_names: t.var_names.clone(),
        lock_names: t.lock_names.clone(),
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serialize_trace(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lock_write_unlock() {
        let t = parse_trace("1,T1,LK,y\n2,T1,WR,x\n3,T1,UK,y").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.thread_count(), 1);
        assert!(matches!(t.event(1).kind, EventKind::Acquire(_)));
        assert!(matches!(t.event(2).kind, EventKind::Write(_)));
        assert!(matches!(t.event(3).kind, EventKind::Release(_)));
        assert_eq!(t.thread_name(t.event(1).tid), "T1");
    }

    #[test]
    fn parses_loc_and_gan_fields() {
        // A tracer-produced line shape; placed at position 1 to keep the
        // file contiguous.
        let t = parse_trace("1,1,WR,2657,JkMain.java:339:237,1423414").unwrap();
        let e = t.event(1);
        assert!(e.kind.is_write());
        assert_eq!(e.loc.as_deref(), Some("JkMain.java:339:237"));
        assert_eq!(e.gan, Some(1423414));
        assert_eq!(t.var_name(e.kind.var().unwrap()), "2657");
    }

    #[test]
    fn empty_input_gives_empty_trace() {
        let t = parse_trace("").unwrap();
        assert!(t.is_empty());
        assert_eq!(t.thread_count(), 0);
        let t = parse_trace("# only a comment\n").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn rejects_non_contiguous_positions() {
        let err = parse_trace("1,T1,WR,x\n3,T1,WR,x").unwrap_err();
        assert!(matches!(
            err,
            ParseError::NonContiguousPos { expected: 2, found: 3, .. }
        ));
        // duplicate explicit pos
        let err = parse_trace("1,T1,WR,x\n1,T1,WR,x").unwrap_err();
        assert!(matches!(err, ParseError::NonContiguousPos { .. }));
        // a lone high position is non-contiguous as well
        let err = parse_trace("1429007,1,WR,2657").unwrap_err();
        assert!(matches!(err, ParseError::NonContiguousPos { expected: 1, .. }));
    }

    #[test]
    fn rejects_unknown_op_and_name_clash() {
        let err = parse_trace("1,T1,XX,x").unwrap_err();
        assert!(matches!(err, ParseError::UnknownOp { .. }));
        let err = parse_trace("1,T1,WR,y\n2,T1,LK,y").unwrap_err();
        assert!(matches!(err, ParseError::NameClash { .. }));
    }

    #[test]
    fn serialize_round_trips() {
        let text = "1,T1,LK,y\n2,T1,WR,x\n3,T1,UK,y\n4,T2,LK,y\n5,T2,WR,x\n6,T2,UK,y\n";
        let t = parse_trace(text).unwrap();
        assert_eq!(serialize_trace(&t), text);
        let again = parse_trace(&serialize_trace(&t)).unwrap();
        assert_eq!(again, t);
        assert_eq!(serialize_trace(&parse_trace("").unwrap()), "");
    }

    #[test]
    fn interning_order_is_first_appearance() {
        let t = parse_trace("1,T2,WR,x\n2,T1,WR,x").unwrap();
        assert_eq!(t.thread_name(ThreadId(0)), "T2");
        assert_eq!(t.thread_name(ThreadId(1)), "T1");
    }

    const FIG1B: &str = "1,T1,LK,y\n2,T1,WR,x\n3,T1,UK,y\n4,T2,LK,y\n5,T2,WR,x\n6,T2,UK,y";
    const FIG1C: &str = "1,T1,LK,y\n2,T1,WR,x\n3,T2,LK,y\n4,T2,WR,x\n5,T1,UK,y\n6,T2,UK,y";

    #[test]
    fn accurate_lock_trace_is_strict_valid() {
        let t = parse_trace(FIG1B).unwrap();
        assert!(validate(&t, ValidityLevel::Strict).is_valid());
        assert!(validate(&t, ValidityLevel::Lenient).is_valid());
    }

    #[test]
    fn overlapping_sections_fail_strict_only() {
        let t = parse_trace(FIG1C).unwrap();
        let strict = validate(&t, ValidityLevel::Strict);
        assert_eq!(strict.violations.len(), 1);
        assert_eq!(strict.violations[0].pos, 3);
        assert_eq!(strict.violations[0].kind, ViolationKind::OverlappingAcquire);
        assert!(validate(&t, ValidityLevel::Lenient).is_valid());
    }

    #[test]
    fn lenient_violation_kinds() {
        let t = parse_trace("1,T1,LK,y").unwrap();
        let rep = validate(&t, ValidityLevel::Lenient);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].kind, ViolationKind::DanglingAcquire);

        let t = parse_trace("1,T1,UK,y").unwrap();
        let rep = validate(&t, ValidityLevel::Lenient);
        assert_eq!(rep.violations[0].kind, ViolationKind::UnmatchedRelease);

        let t = parse_trace("1,T1,LK,y\n2,T1,LK,y\n3,T1,UK,y").unwrap();
        let rep = validate(&t, ValidityLevel::Lenient);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::ReentrantAcquire));
    }

    #[test]
    fn dummy_releases_close_dangling_acquires() {
        let t = parse_trace("1,T1,LK,y").unwrap();
        let fixed = insert_dummy_releases(&t);
        assert_eq!(fixed.len(), 2);
        assert!(matches!(fixed.event(2).kind, EventKind::Release(_)));
        assert_eq!(fixed.event(2).tid, ThreadId(0));
        assert!(validate(&fixed, ValidityLevel::Lenient).is_valid());
    }
}
