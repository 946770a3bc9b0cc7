//! C ABI for the racediag library.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! `*_new`/`*_parse`/`*_load`/`*_diagnose` has a matching `*_free`. All
//! functions return a [`racediag_status`] where failure is possible and
//! store a message retrievable with [`racediag_last_error`] on failure.
//! Strings returned as `char*` are owned by the caller and must be released
//! with [`racediag_string_free`].

use racediag::analyzers::{run_fasttrack, run_hb_partner, run_shb_partner, run_sshb_phase1};
use racediag::diagnosis::{self, DiagnosisReport, Verdict};
use racediag::lockset;
use racediag::report;
use racediag::trace::{parse_trace, validate, Trace, ValidityLevel};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Status codes returned by the API.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum racediag_status {
    RACEDIAG_OK = 0,
    /// A required pointer argument was null.
    RACEDIAG_NULL_ARGUMENT = 1,
    /// Input text was not valid UTF-8 or not a parseable trace.
    RACEDIAG_PARSE_ERROR = 2,
    /// The trace failed well-formedness validation.
    RACEDIAG_INVALID_TRACE = 3,
    /// File could not be read or written.
    RACEDIAG_IO_ERROR = 4,
    /// An index was out of range.
    RACEDIAG_OUT_OF_RANGE = 5,
}

use racediag_status::*;

/// Opaque parsed trace.
pub struct racediag_trace {
    inner: Trace,
}

/// Opaque diagnosis result, bound to the trace it was computed from.
pub struct racediag_report {
    trace: Trace,
    report: DiagnosisReport,
}

/// Analyzer selector for [`racediag_count_races`].
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum racediag_algo {
    RACEDIAG_ALGO_FASTTRACK = 0,
    RACEDIAG_ALGO_HB = 1,
    RACEDIAG_ALGO_SHB = 2,
    RACEDIAG_ALGO_SSHB = 3,
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn racediag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn racediag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map(|c| c.as_ptr())
            .unwrap_or(ptr::null())
    })
}

unsafe fn cstr_arg<'a>(s: *const c_char) -> Option<&'a str> {
    if s.is_null() {
        return None;
    }
    CStr::from_ptr(s).to_str().ok()
}

fn parse_into(text: &str, out: *mut *mut racediag_trace) -> racediag_status {
    match parse_trace(text) {
        Ok(t) => {
            let rep = validate(&t, ValidityLevel::Lenient);
            if !rep.is_valid() {
                set_error(format!(
                    "trace is not well-formed: {}",
                    rep.violations[0].message
                ));
                return RACEDIAG_INVALID_TRACE;
            }
            unsafe {
                *out = Box::into_raw(Box::new(racediag_trace { inner: t }));
            }
            RACEDIAG_OK
        }
        Err(e) => {
            set_error(e.to_string());
            RACEDIAG_PARSE_ERROR
        }
    }
}

/// Parses a trace from UTF-8 text in the canonical line format.
///
/// # Safety
/// `text` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn racediag_trace_parse(
    text: *const c_char,
    out: *mut *mut racediag_trace,
) -> racediag_status {
    if out.is_null() {
        return RACEDIAG_NULL_ARGUMENT;
    }
    let Some(text) = cstr_arg(text) else {
        set_error("text argument was null or not UTF-8".into());
        return RACEDIAG_NULL_ARGUMENT;
    };
    parse_into(text, out)
}

/// Reads and parses a trace file.
///
/// # Safety
/// `path` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn racediag_trace_load(
    path: *const c_char,
    out: *mut *mut racediag_trace,
) -> racediag_status {
    if out.is_null() {
        return RACEDIAG_NULL_ARGUMENT;
    }
    let Some(path) = cstr_arg(path) else {
        set_error("path argument was null or not UTF-8".into());
        return RACEDIAG_NULL_ARGUMENT;
    };
    match std::fs::read_to_string(path) {
        Ok(text) => parse_into(&text, out),
        Err(e) => {
            set_error(format!("{path}: {e}"));
            RACEDIAG_IO_ERROR
        }
    }
}

/// Releases a trace handle; null is ignored.
///
/// # Safety
/// `t` must be a pointer from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn racediag_trace_free(t: *mut racediag_trace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of events in the trace; 0 for null.
///
/// # Safety
/// `t` must be a live trace handle or null.
#[no_mangle]
pub unsafe extern "C" fn racediag_trace_events(t: *const racediag_trace) -> u64 {
    t.as_ref().map(|t| t.inner.len() as u64).unwrap_or(0)
}

/// Number of distinct threads in the trace; 0 for null.
///
/// # Safety
/// `t` must be a live trace handle or null.
#[no_mangle]
pub unsafe extern "C" fn racediag_trace_threads(t: *const racediag_trace) -> u64 {
    t.as_ref().map(|t| t.inner.thread_count() as u64).unwrap_or(0)
}

/// Runs one analyzer and reports its race counts by category.
///
/// # Safety
/// `t` must be a live trace handle; count outputs may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn racediag_count_races(
    t: *const racediag_trace,
    algo: racediag_algo,
    out_total: *mut u64,
    out_ww: *mut u64,
    out_wr: *mut u64,
    out_rw: *mut u64,
) -> racediag_status {
    let Some(t) = t.as_ref() else {
        return RACEDIAG_NULL_ARGUMENT;
    };
    let pairs = match algo {
        racediag_algo::RACEDIAG_ALGO_FASTTRACK => {
            let rep = run_fasttrack(&t.inner);
            rep.occurrences
                .iter()
                .map(|o| racediag::analyzers::RacePair::new(&t.inner, o.partner_pos, o.pos))
                .collect()
        }
        racediag_algo::RACEDIAG_ALGO_HB => run_hb_partner(&t.inner),
        racediag_algo::RACEDIAG_ALGO_SHB => run_shb_partner(&t.inner),
        racediag_algo::RACEDIAG_ALGO_SSHB => run_sshb_phase1(&t.inner).races,
    };
    let counts = report::RaceCounts::from_pairs(&pairs);
    if !out_total.is_null() {
        *out_total = counts.total as u64;
    }
    if !out_ww.is_null() {
        *out_ww = counts.ww as u64;
    }
    if !out_wr.is_null() {
        *out_wr = counts.wr as u64;
    }
    if !out_rw.is_null() {
        *out_rw = counts.rw as u64;
    }
    RACEDIAG_OK
}

/// Runs the two-phase diagnosis, optionally with the lockset filter.
///
/// # Safety
/// `t` must be a live trace handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn racediag_diagnose(
    t: *const racediag_trace,
    lockset_filter: bool,
    out: *mut *mut racediag_report,
) -> racediag_status {
    let Some(t) = t.as_ref() else {
        return RACEDIAG_NULL_ARGUMENT;
    };
    if out.is_null() {
        return RACEDIAG_NULL_ARGUMENT;
    }
    let mut rep = diagnosis::diagnose_all(&t.inner);
    if lockset_filter {
        let ls = lockset::compute_locksets(&t.inner);
        lockset::lockset_flags(&mut rep, &ls);
    }
    *out = Box::into_raw(Box::new(racediag_report {
        trace: t.inner.clone(),
        report: rep,
    }));
    RACEDIAG_OK
}

/// Releases a report handle; null is ignored.
///
/// # Safety
/// `r` must be a pointer from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn racediag_report_free(r: *mut racediag_report) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Top-level verdict counts of a diagnosis.
///
/// # Safety
/// `r` must be a live report handle; count outputs may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn racediag_report_counts(
    r: *const racediag_report,
    out_races: *mut u64,
    out_guaranteed: *mut u64,
    out_maybe: *mut u64,
    out_lockset_fp: *mut u64,
) -> racediag_status {
    let Some(r) = r.as_ref() else {
        return RACEDIAG_NULL_ARGUMENT;
    };
    let counts = r.report.counts();
    if !out_races.is_null() {
        *out_races = counts.total as u64;
    }
    if !out_guaranteed.is_null() {
        *out_guaranteed = counts.guaranteed as u64;
    }
    if !out_maybe.is_null() {
        *out_maybe = (counts.total - counts.guaranteed) as u64;
    }
    if !out_lockset_fp.is_null() {
        *out_lockset_fp = r.report.lockset_fp_count.unwrap_or(0) as u64;
    }
    RACEDIAG_OK
}

/// Verdict of the i-th race: 1 guaranteed, 2 maybe. Event positions of the
/// pair go to `out_first`/`out_second`.
///
/// # Safety
/// `r` must be a live report handle; outputs may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn racediag_report_race(
    r: *const racediag_report,
    index: u64,
    out_first: *mut u64,
    out_second: *mut u64,
    out_verdict: *mut u32,
    out_lockset_fp: *mut bool,
) -> racediag_status {
    let Some(r) = r.as_ref() else {
        return RACEDIAG_NULL_ARGUMENT;
    };
    let Some(c) = r.report.races.get(index as usize) else {
        set_error(format!(
            "race index {index} out of range ({} races)",
            r.report.races.len()
        ));
        return RACEDIAG_OUT_OF_RANGE;
    };
    if !out_first.is_null() {
        *out_first = c.pair.first as u64;
    }
    if !out_second.is_null() {
        *out_second = c.pair.second as u64;
    }
    if !out_verdict.is_null() {
        *out_verdict = match c.verdict {
            Verdict::Guaranteed => 1,
            Verdict::Maybe => 2,
        };
    }
    if !out_lockset_fp.is_null() {
        *out_lockset_fp = c.lockset_fp;
    }
    RACEDIAG_OK
}

/// Full diagnosis as a JSON document; release with
/// [`racediag_string_free`].
///
/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn racediag_report_json(r: *const racediag_report) -> *mut c_char {
    let Some(r) = r.as_ref() else {
        return ptr::null_mut();
    };
    let mut doc = report::ReportDocument::new("diagnose", None, r.trace.meta());
    doc.diagnosis = Some(report::diag_section(&r.trace, &r.report, &r.report.races));
    match CString::new(doc.to_json()) {
        Ok(s) => s.into_raw(),
        Err(_) => ptr::null_mut(),
    }
}

/// Frees a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must have been returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn racediag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn parse_diagnose_and_free_roundtrip() {
        let text = c("1,T1,WR,x\n2,T2,RD,x\n3,T3,WR,y\n4,T3,WR,x\n5,T2,WR,y\n");
        let mut trace: *mut racediag_trace = ptr::null_mut();
        unsafe {
            assert_eq!(racediag_trace_parse(text.as_ptr(), &mut trace), RACEDIAG_OK);
            assert_eq!(racediag_trace_events(trace), 5);
            assert_eq!(racediag_trace_threads(trace), 3);

            let mut report: *mut racediag_report = ptr::null_mut();
            assert_eq!(racediag_diagnose(trace, true, &mut report), RACEDIAG_OK);
            let (mut races, mut guaranteed, mut maybe, mut fp) = (0u64, 0u64, 0u64, 0u64);
            assert_eq!(
                racediag_report_counts(report, &mut races, &mut guaranteed, &mut maybe, &mut fp),
                RACEDIAG_OK
            );
            assert_eq!(races, 4);
            assert_eq!(guaranteed, 3);
            assert_eq!(maybe, 1);
            assert_eq!(fp, 0);

            let (mut first, mut second, mut verdict, mut is_fp) = (0u64, 0u64, 0u32, false);
            assert_eq!(
                racediag_report_race(report, 0, &mut first, &mut second, &mut verdict, &mut is_fp),
                RACEDIAG_OK
            );
            assert_eq!((first, second, verdict), (1, 2, 1));
            assert_eq!(
                racediag_report_race(report, 99, &mut first, &mut second, &mut verdict, &mut is_fp),
                RACEDIAG_OUT_OF_RANGE
            );
            assert!(!racediag_last_error().is_null());

            let json = racediag_report_json(report);
            assert!(!json.is_null());
            let text = CStr::from_ptr(json).to_str().unwrap().to_string();
            assert!(text.contains("\"races_over_guaranteed\": \"4/3\""));
            racediag_string_free(json);

            racediag_report_free(report);
            racediag_trace_free(trace);
        }
    }

    #[test]
    fn errors_are_reported() {
        let text = c("1,T1,XX,x\n");
        let mut trace: *mut racediag_trace = ptr::null_mut();
        unsafe {
            assert_eq!(
                racediag_trace_parse(text.as_ptr(), &mut trace),
                RACEDIAG_PARSE_ERROR
            );
            let msg = CStr::from_ptr(racediag_last_error()).to_str().unwrap();
            assert!(msg.contains("unknown op code"));

            let missing = c("/nonexistent/trace.csv");
            assert_eq!(
                racediag_trace_load(missing.as_ptr(), &mut trace),
                RACEDIAG_IO_ERROR
            );
        }
    }

    #[test]
    fn analyzer_counts_via_abi() {
        let text = c("1,T1,WR,y\n2,T1,WR,x\n3,T2,RD,x\n4,T2,WR,y\n");
        let mut trace: *mut racediag_trace = ptr::null_mut();
        unsafe {
            assert_eq!(racediag_trace_parse(text.as_ptr(), &mut trace), RACEDIAG_OK);
            let mut total = 0u64;
            let mut ww = 0u64;
            assert_eq!(
                racediag_count_races(
                    trace,
                    racediag_algo::RACEDIAG_ALGO_SHB,
                    &mut total,
                    &mut ww,
                    ptr::null_mut(),
                    ptr::null_mut()
                ),
                RACEDIAG_OK
            );
            assert_eq!((total, ww), (1, 0), "the dependency hides the ww pair");
            assert_eq!(
                racediag_count_races(
                    trace,
                    racediag_algo::RACEDIAG_ALGO_HB,
                    &mut total,
                    &mut ww,
                    ptr::null_mut(),
                    ptr::null_mut()
                ),
                RACEDIAG_OK
            );
            assert_eq!((total, ww), (2, 1));
            racediag_trace_free(trace);
        }
    }
}
