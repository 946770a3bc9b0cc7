//! Vector clocks and epochs shared by the streaming analyzers.
//!
//! Clocks are fixed-width: the number of threads is known after parsing, so
//! every clock in one analysis has the same length and thread `j` always maps
//! to component `j`. Clocks are value types; storing one into a lock record or
//! an edge takes a snapshot, never an alias.

use serde::Serialize;

/// Fixed-width vector of logical timestamps, one per thread.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VectorClock(Vec<u32>);

impl VectorClock {
    /// All-zero clock of the given width.
    pub fn zero(threads: usize) -> Self {
        VectorClock(vec![0; threads])
    }

    /// Initial clock for thread `tid`: all zeros except component `tid`,
    /// which starts at 1.
    pub fn initial(threads: usize, tid: usize) -> Self {
        let mut v = vec![0; threads];
        v[tid] = 1;
        VectorClock(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Timestamp for thread `tid`.
    pub fn get(&self, tid: usize) -> u32 {
        self.0[tid]
    }

    /// Pointwise supremum with `other`.
    ///
    /// Panics if the widths differ; clocks from different analyses must not
    /// be mixed.
    pub fn join(&self, other: &VectorClock) -> VectorClock {
        assert_eq!(
            self.0.len(),
            other.0.len(),
            "vector clock width mismatch: {} vs {}",
            self.0.len(),
            other.0.len()
        );
        VectorClock(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| (*a).max(*b))
                .collect(),
        )
    }

    /// In-place pointwise supremum, avoids the allocation of [`join`].
    ///
    /// [`join`]: VectorClock::join
    pub fn join_in_place(&mut self, other: &VectorClock) {
        assert_eq!(self.0.len(), other.0.len(), "vector clock width mismatch");
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a = (*a).max(*b);
        }
    }

    /// Copy of this clock with component `tid` incremented by one.
    pub fn inc(&self, tid: usize) -> VectorClock {
        let mut v = self.clone();
        v.inc_in_place(tid);
        v
    }

    pub fn inc_in_place(&mut self, tid: usize) {
        self.0[tid] += 1;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for VectorClock {
    fn from(v: Vec<u32>) -> Self {
        VectorClock(v)
    }
}

impl std::fmt::Display for VectorClock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

/// `(thread, stamp)` pair uniquely naming a read/write event within one
/// analysis run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Epoch {
    pub tid: u32,
    pub stamp: u32,
}

impl Epoch {
    pub fn new(tid: u32, stamp: u32) -> Self {
        Epoch { tid, stamp }
    }
}

impl std::fmt::Display for Epoch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.tid, self.stamp)
    }
}

/// Concurrency test between an epoch and a clock: true iff the event named by
/// `e` is not ordered before the event holding clock `v`.
///
/// This is the `k > Th(i)[j]` comparison the analyzers run against every
/// candidate set member.
pub fn epoch_concurrent(e: Epoch, v: &VectorClock) -> bool {
    assert!(
        (e.tid as usize) < v.len(),
        "epoch thread {} out of range for clock width {}",
        e.tid,
        v.len()
    );
    e.stamp > v.get(e.tid as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_is_pointwise_max() {
        let a = VectorClock::from(vec![1, 0, 0]);
        let b = VectorClock::from(vec![0, 2, 0]);
        assert_eq!(a.join(&b), VectorClock::from(vec![1, 2, 0]));
    }

    #[test]
    fn join_idempotent_and_identity() {
        let v = VectorClock::from(vec![3, 1, 4]);
        assert_eq!(v.join(&v), v);
        let zero = VectorClock::zero(3);
        assert_eq!(zero.join(&v), v);
        assert_eq!(v.join(&zero), v);
    }

    #[test]
    #[should_panic(expected = "width mismatch")]
    fn join_rejects_width_mismatch() {
        let a = VectorClock::zero(2);
        let b = VectorClock::zero(3);
        let _ = a.join(&b);
    }

    #[test]
    fn inc_bumps_single_component() {
        let v = VectorClock::from(vec![1, 0]);
        assert_eq!(v.inc(0), VectorClock::from(vec![2, 0]));
        assert_eq!(v.inc(0).inc(0).get(0), v.get(0) + 2);
    }

    #[test]
    #[should_panic]
    fn inc_rejects_out_of_range() {
        let v = VectorClock::zero(2);
        let _ = v.inc(2);
    }

    // Thread 2 of the five-event run in the worked example: starts at
    // [0,1,0], reads x (increment), then writes y while still at [0,2,0].
    #[test]
    fn clock_progression_matches_worked_run() {
        let mut th2 = VectorClock::initial(3, 1);
        assert_eq!(th2, VectorClock::from(vec![0, 1, 0]));
        th2.inc_in_place(1); // after the read event
        assert_eq!(th2, VectorClock::from(vec![0, 2, 0]));
    }

    #[test]
    fn epoch_concurrency_cases() {
        // Epoch 1#1 against [0,1,0]: thread 1 (index 0) stamp 1 unseen.
        assert!(epoch_concurrent(
            Epoch::new(0, 1),
            &VectorClock::from(vec![0, 1, 0])
        ));
        // Same epoch but the clock has seen stamp 1 of thread 0.
        assert!(!epoch_concurrent(
            Epoch::new(0, 1),
            &VectorClock::from(vec![1, 1, 0])
        ));
        // Epoch 3#2 against [0,2,0]: drives the write-write pair of the
        // worked run (stamp 2 of the third thread is unseen).
        assert!(epoch_concurrent(
            Epoch::new(2, 2),
            &VectorClock::from(vec![0, 2, 0])
        ));
    }
}
