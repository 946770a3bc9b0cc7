//! Trace-based data race prediction and diagnosis.
//!
//! Given a trace of read/write/acquire/release events, the analyzers predict
//! races with happens-before vector-clock passes, and the diagnosis phase
//! classifies each predicted race as *guaranteed* (real under every
//! consistent choice of write-read dependencies, i.e. robust against
//! inaccurately recorded unsynchronized accesses) or *maybe* (some choice
//! orders the pair, so it could be a tracing artifact). A lockset filter
//! flags guaranteed races whose events are mutually exclusive, the footprint
//! of inaccurately recorded lock operations.

pub mod analyzers;
pub mod diagnosis;
pub mod lockset;
pub mod perturb_gen;
pub mod relations;
pub mod report;
pub mod trace;
pub mod vclock;
