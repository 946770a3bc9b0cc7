//! Reference (closure-based) happens-before machinery: the ground truth the
//! streaming analyzers and the diagnosis phase are tested against.
//!
//! Everything here recomputes relations from scratch over the whole trace, so
//! it is meant for small inputs; [`CLOSURE_EVENT_LIMIT`] guards the table
//! size. The streaming analyzers in [`crate::analyzers`] handle large traces.

use crate::trace::{EventKind, Trace, VarId};
use std::collections::BTreeMap;
use thiserror::Error;

/// Upper bound on trace length for closure-table construction.
pub const CLOSURE_EVENT_LIMIT: usize = 10_000;

/// Default cap on the number of write-read dependency choice combinations
/// explored by [`enumerate_someshb`].
pub const DEFAULT_PRODUCT_CAP: u64 = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("candidate product {product} exceeds cap {cap}")]
    CandidateProductTooLarge { product: u128, cap: u64 },
}

/// Events, in order, forming a cycle (each node has an edge to the next and
/// the last closes back to the first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleWitness(pub Vec<u32>);

/// Transitive reachability over the events of one trace, indexed by 1-based
/// trace position. Irreflexive and antisymmetric by construction (the
/// generating edge sets are closed only when acyclic).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrder {
    n: usize,
    words: usize,
    reach: Vec<u64>,
}

impl PartialOrder {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// True iff the event at position `a` happens before the one at `b`.
    pub fn ordered(&self, a: u32, b: u32) -> bool {
        debug_assert!(a >= 1 && b >= 1 && a as usize <= self.n && b as usize <= self.n);
        let (a, b) = ((a - 1) as usize, (b - 1) as usize);
        self.reach[a * self.words + b / 64] & (1u64 << (b % 64)) != 0
    }

    pub fn ordered_either(&self, a: u32, b: u32) -> bool {
        self.ordered(a, b) || self.ordered(b, a)
    }

    /// Unsynchronized: neither direction is ordered.
    pub fn unordered(&self, a: u32, b: u32) -> bool {
        !self.ordered_either(a, b)
    }
}

/// Transitively closes a generating edge set over `n` events, or reports a
/// cycle. Edges may point backwards in trace order (chosen write-read
/// dependency edges can), so this runs a full topological pass.
pub fn close(n: usize, edges: &[(u32, u32)]) -> Result<PartialOrder, CycleWitness> {
    assert!(
        n <= CLOSURE_EVENT_LIMIT,
        "closure-table mode supports at most {CLOSURE_EVENT_LIMIT} events, got {n}"
    );
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(s, d) in edges {
        debug_assert!(s >= 1 && d >= 1 && s as usize <= n && d as usize <= n && s != d);
        adj[(s - 1) as usize].push(d - 1);
    }

    // Iterative DFS: topological order + cycle detection with path recovery.
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; n];
    let mut topo: Vec<u32> = Vec::with_capacity(n);
    let mut path: Vec<u32> = Vec::new();
    let mut path_index: Vec<usize> = vec![usize::MAX; n];

    for start in 0..n as u32 {
        if color[start as usize] != WHITE {
            continue;
        }
        let mut stack: Vec<(u32, usize)> = vec![(start, 0)];
        color[start as usize] = GRAY;
        path_index[start as usize] = path.len();
        path.push(start);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < adj[node as usize].len() {
                let child = adj[node as usize][*next];
                *next += 1;
                match color[child as usize] {
                    WHITE => {
                        color[child as usize] = GRAY;
                        path_index[child as usize] = path.len();
                        path.push(child);
                        stack.push((child, 0));
                    }
                    GRAY => {
                        // Back edge: the cycle is the path suffix from child.
                        let from = path_index[child as usize];
                        let cycle = path[from..].iter().map(|&i| i + 1).collect();
                        return Err(CycleWitness(cycle));
                    }
                    _ => {}
                }
            } else {
                color[node as usize] = BLACK;
                path_index[node as usize] = usize::MAX;
                path.pop();
                topo.push(node);
                stack.pop();
            }
        }
    }

    // topo holds nodes in reverse topological order (children first), which
    // is exactly the order the reachability union wants.
    let words = n.div_ceil(64);
    let mut reach = vec![0u64; n * words];
    for &node in &topo {
        let node = node as usize;
        // Collect into a scratch row to sidestep aliasing of `reach` rows.
        let mut row = vec![0u64; words];
        for &child in &adj[node] {
            let child = child as usize;
            row[child / 64] |= 1u64 << (child % 64);
            let crow = &reach[child * words..(child + 1) * words];
            for (r, c) in row.iter_mut().zip(crow.iter()) {
                *r |= c;
            }
        }
        reach[node * words..(node + 1) * words].copy_from_slice(&row);
    }

    Ok(PartialOrder { n, words, reach })
}

/// Program-order successor edges: consecutive events of the same thread.
fn po_edges(t: &Trace) -> Vec<(u32, u32)> {
    let mut last: Vec<Option<u32>> = vec![None; t.thread_count()];
    let mut edges = Vec::new();
    for e in t.events() {
        let tid = e.tid.0 as usize;
        if let Some(prev) = last[tid] {
            edges.push((prev, e.pos));
        }
        last[tid] = Some(e.pos);
    }
    edges
}

/// Release-acquire dependency edges, literally: `rel(y)@j < acq(y)@k` when
/// `j < k`, the threads differ, and no event strictly between them from a
/// thread other than the releaser's is an acquire on `y`. That makes the
/// target the first later acquire of `y` by another thread.
fn rad_edges(t: &Trace) -> Vec<(u32, u32)> {
    let mut per_lock: BTreeMap<u32, (Vec<&crate::trace::Event>, Vec<&crate::trace::Event>)> =
        BTreeMap::new();
    for e in t.events() {
        match e.kind {
            EventKind::Release(l) => per_lock.entry(l.0).or_default().0.push(e),
            EventKind::Acquire(l) => per_lock.entry(l.0).or_default().1.push(e),
            _ => {}
        }
    }
    let mut edges = Vec::new();
    for (rels, acqs) in per_lock.values() {
        for rel in rels {
            let next = acqs
                .iter()
                .find(|a| a.pos > rel.pos && a.tid != rel.tid);
            if let Some(acq) = next {
                edges.push((rel.pos, acq.pos));
            }
        }
    }
    edges
}

/// Nearest-preceding-write edges: for each read of `x`, an edge from the
/// write of `x` with the largest position before it, if any.
fn wrd_nearest_edges(t: &Trace) -> Vec<(u32, u32)> {
    let mut last_write: BTreeMap<u32, u32> = BTreeMap::new();
    let mut edges = Vec::new();
    for e in t.events() {
        match e.kind {
            EventKind::Write(v) => {
                last_write.insert(v.0, e.pos);
            }
            EventKind::Read(v) => {
                if let Some(&w) = last_write.get(&v.0) {
                    edges.push((w, e.pos));
                }
            }
            _ => {}
        }
    }
    edges
}

fn hb_generating_edges(t: &Trace) -> Vec<(u32, u32)> {
    let mut edges = po_edges(t);
    edges.extend(rad_edges(t));
    edges
}

/// Happens-before: program order plus release-acquire dependencies.
pub fn hb_relation(t: &Trace) -> PartialOrder {
    close(t.len(), &hb_generating_edges(t))
        .expect("PO and RAD edges are position-monotonic, the closure cannot cycle")
}

/// Schedulable happens-before: HB plus the nearest-preceding-write dependency
/// for every read.
pub fn shb_relation(t: &Trace) -> PartialOrder {
    let mut edges = hb_generating_edges(t);
    edges.extend(wrd_nearest_edges(t));
    close(t.len(), &edges)
        .expect("WRD edges are position-monotonic, the closure cannot cycle")
}

/// Write-read dependency candidates for one read: the writes the read could
/// have observed once trace order between unsynchronized accesses is
/// distrusted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrdCandidates {
    pub read: u32,
    /// Closest writes unsynchronized with the read (may follow it in the
    /// trace).
    pub unsync: Vec<u32>,
    /// Closest writes happening before the read.
    pub sync: Vec<u32>,
}

impl WrdCandidates {
    /// Union of both candidate groups, in position order.
    pub fn all(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.unsync.iter().chain(self.sync.iter()).copied().collect();
        v.sort_unstable();
        v
    }
}

fn writes_on(t: &Trace, var: VarId) -> Vec<u32> {
    t.events()
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Write(v) if v == var))
        .map(|e| e.pos)
        .collect()
}

/// Computes the candidate groups for `read_pos` per their defining closeness
/// conditions. `read_pos` must name a read event of `t`.
pub fn wrd_candidates(t: &Trace, hb: &PartialOrder, read_pos: u32) -> WrdCandidates {
    let read = t.event(read_pos);
    let var = match read.kind {
        EventKind::Read(v) => v,
        _ => panic!("event {read_pos} is not a read"),
    };
    let writes = writes_on(t, var);

    let unsync: Vec<u32> = writes
        .iter()
        .copied()
        .filter(|&w| hb.unordered(w, read_pos))
        .filter(|&w| {
            !writes
                .iter()
                .any(|&w2| w2 != w && hb.unordered(w2, read_pos) && hb.ordered(w, w2))
        })
        .collect();

    let sync: Vec<u32> = writes
        .iter()
        .copied()
        .filter(|&w| hb.ordered(w, read_pos))
        .filter(|&w| {
            !writes
                .iter()
                .any(|&w2| w2 != w && hb.ordered(w2, read_pos) && hb.ordered(w, w2))
        })
        .collect();

    WrdCandidates {
        read: read_pos,
        unsync,
        sync,
    }
}

/// Drops synchronized candidates that happen before some unsynchronized one;
/// any dependency they would contribute is already covered through it.
pub fn prune_candidates(c: &WrdCandidates, hb: &PartialOrder) -> WrdCandidates {
    let sync = c
        .sync
        .iter()
        .copied()
        .filter(|&g| !c.unsync.iter().any(|&f| hb.ordered(g, f)))
        .collect();
    WrdCandidates {
        read: c.read,
        unsync: c.unsync.clone(),
        sync,
    }
}

/// True iff the read at `read_pos` has at least one write happening before
/// it (its synchronized candidate group is non-empty).
pub fn has_initial_write(t: &Trace, hb: &PartialOrder, read_pos: u32) -> bool {
    !wrd_candidates(t, hb, read_pos).sync.is_empty()
}

fn reads_of(t: &Trace) -> Vec<u32> {
    t.events()
        .iter()
        .filter(|e| e.kind.is_read())
        .map(|e| e.pos)
        .collect()
}

/// HB plus an edge from every candidate of every read. The result may be
/// cyclic, in which case the cycle is returned instead.
pub fn strong_shb(t: &Trace) -> Result<PartialOrder, CycleWitness> {
    let hb = hb_relation(t);
    let mut edges = hb_generating_edges(t);
    for r in reads_of(t) {
        for w in wrd_candidates(t, &hb, r).all() {
            edges.push((w, r));
        }
    }
    close(t.len(), &edges)
}

/// One feasible assignment of a candidate write to every read.
#[derive(Debug, Clone)]
pub struct SomeShbInstance {
    /// read position -> chosen write position (reads without candidates are
    /// absent).
    pub choice: BTreeMap<u32, u32>,
    pub order: PartialOrder,
}

/// Enumerates every combination of candidate choices (one per read) and keeps
/// the acyclic ones with their closures. Exponential in the number of reads;
/// combinations beyond `cap` are refused.
pub fn enumerate_someshb_with_cap(
    t: &Trace,
    cap: u64,
) -> Result<Vec<SomeShbInstance>, RelationError> {
    let hb = hb_relation(t);
    let hb_edges = hb_generating_edges(t);

    let mut choice_sets: Vec<(u32, Vec<u32>)> = Vec::new();
    for r in reads_of(t) {
        let cand = wrd_candidates(t, &hb, r).all();
        if !cand.is_empty() {
            choice_sets.push((r, cand));
        }
    }

    let mut product: u128 = 1;
    for (_, set) in &choice_sets {
        product = product.saturating_mul(set.len() as u128);
    }
    if product > cap as u128 {
        return Err(RelationError::CandidateProductTooLarge { product, cap });
    }

    let mut instances = Vec::new();
    let mut indices = vec![0usize; choice_sets.len()];
    loop {
        let mut edges = hb_edges.clone();
        let mut choice = BTreeMap::new();
        for (slot, (r, set)) in indices.iter().zip(choice_sets.iter()) {
            let w = set[*slot];
            choice.insert(*r, w);
            edges.push((w, *r));
        }
        if let Ok(order) = close(t.len(), &edges) {
            instances.push(SomeShbInstance { choice, order });
        }
        // advance the mixed-radix counter
        let mut i = 0;
        loop {
            if i == indices.len() {
                return Ok(instances);
            }
            indices[i] += 1;
            if indices[i] < choice_sets[i].1.len() {
                break;
            }
            indices[i] = 0;
            i += 1;
        }
    }
}

/// [`enumerate_someshb_with_cap`] with the default cap.
pub fn enumerate_someshb(t: &Trace) -> Result<Vec<SomeShbInstance>, RelationError> {
    enumerate_someshb_with_cap(t, DEFAULT_PRODUCT_CAP)
}

/// Ground-truth verdict for a conflicting event pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum OracleVerdict {
    /// A race under every feasible candidate assignment.
    Guaranteed,
    /// Some feasible assignment orders the pair, so the race may be a
    /// tracing artifact.
    Maybe,
    /// The pair is already ordered by happens-before.
    NotAnHbRace,
}

/// Classifies the pair `(a, b)` by exhaustive instance enumeration.
///
/// For a write/read pair whose write is a candidate of the read, the
/// instance that picks exactly that write only counts as ordering the pair
/// if the order still holds once its direct write-to-read edge is dropped;
/// the direct dependency is the race being judged, not evidence against it.
pub fn oracle_classify(t: &Trace, a: u32, b: u32, cap: u64) -> Result<OracleVerdict, RelationError> {
    let hb = hb_relation(t);
    if hb.ordered_either(a, b) {
        return Ok(OracleVerdict::NotAnHbRace);
    }
    let instances = enumerate_someshb_with_cap(t, cap)?;
    Ok(classify_with_instances(t, &hb, &instances, a, b))
}

/// Classification against pre-computed instances; lets callers reuse one
/// enumeration across many pairs.
pub fn classify_with_instances(
    t: &Trace,
    hb: &PartialOrder,
    instances: &[SomeShbInstance],
    a: u32,
    b: u32,
) -> OracleVerdict {
    if hb.ordered_either(a, b) {
        return OracleVerdict::NotAnHbRace;
    }

    // Identify a direct write->read dependency between the pair, if any.
    let ea = t.event(a);
    let eb = t.event(b);
    let direct = match (&ea.kind, &eb.kind) {
        (EventKind::Write(v), EventKind::Read(u)) if v == u => Some((a, b)),
        (EventKind::Read(u), EventKind::Write(v)) if v == u => Some((b, a)),
        _ => None,
    };
    let direct = direct.filter(|&(w, r)| wrd_candidates(t, hb, r).all().contains(&w));

    let hb_edges = hb_generating_edges(t);
    for inst in instances {
        if !inst.order.ordered_either(a, b) {
            continue;
        }
        if let Some((w, r)) = direct {
            if inst.choice.get(&r) == Some(&w) {
                // Re-derive the order without the pair's own edge.
                let mut edges = hb_edges.clone();
                for (&rr, &ww) in &inst.choice {
                    if rr != r {
                        edges.push((ww, rr));
                    }
                }
                match close(t.len(), &edges) {
                    Ok(order) if order.ordered_either(a, b) => return OracleVerdict::Maybe,
                    _ => continue,
                }
            }
        }
        return OracleVerdict::Maybe;
    }
    OracleVerdict::Guaranteed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::parse_trace;

    const FIG1B: &str = "1,T1,LK,y\n2,T1,WR,x\n3,T1,UK,y\n4,T2,LK,y\n5,T2,WR,x\n6,T2,UK,y";
    const FIG1C: &str = "1,T1,LK,y\n2,T1,WR,x\n3,T2,LK,y\n4,T2,WR,x\n5,T1,UK,y\n6,T2,UK,y";
    const FIG2B: &str = "1,T1,WR,y\n2,T1,WR,x\n3,T2,RD,x\n4,T2,WR,y";
    const FIG2C: &str = "1,T2,RD,x\n2,T1,WR,y\n3,T1,WR,x\n4,T2,WR,y";
    const FIG3C: &str = "1,T1,WR,y\n2,T1,WR,x\n3,T2,RD,x\n4,T2,WR,y\n5,T3,WR,x";
    const SEC4_LOCK: &str = "1,T1,WR,x\n2,T3,WR,x\n3,T2,LK,y\n4,T2,WR,x\n5,T2,UK,y\n6,T1,LK,y\n7,T1,UK,y\n8,T1,RD,x";
    const APP_A11: &str = "1,T1,LK,y1\n2,T1,LK,y2\n3,T1,WR,x\n4,T1,UK,y2\n5,T1,UK,y1\n6,T3,LK,y2\n7,T3,WR,x\n8,T3,UK,y2\n9,T2,LK,y1\n10,T2,RD,x\n11,T2,UK,y1";
    const APP_K5: &str = "1,T5,WR,x\n2,T4,WR,x\n3,T3,LK,y1\n4,T3,WR,x\n5,T3,UK,y1\n6,T2,LK,y2\n7,T2,WR,x\n8,T2,UK,y2\n9,T1,LK,y1\n10,T1,LK,y2\n11,T1,UK,y2\n12,T1,UK,y1\n13,T1,RD,x";
    const EXAMPLE2: &str = "1,T1,RD,y\n2,T1,WR,x\n3,T2,RD,x\n4,T2,WR,y";
    const EXAMPLE3: &str = "1,T2,WR,x\n2,T1,WR,y\n3,T1,RD,y\n4,T1,WR,x\n5,T2,RD,x\n6,T2,WR,y";

    #[test]
    fn hb_orders_writes_through_release_acquire() {
        let t = parse_trace(FIG1B).unwrap();
        let hb = hb_relation(&t);
        assert!(hb.ordered(3, 4), "rel@3 < acq@4");
        assert!(hb.ordered(2, 5), "the two writes are ordered");
    }

    #[test]
    fn hb_finds_no_rad_in_overlapping_sections() {
        let t = parse_trace(FIG1C).unwrap();
        let hb = hb_relation(&t);
        assert!(hb.unordered(2, 4), "the two writes are unordered");
        // release at 5 follows the acquire at 3, no dependency either way
        assert!(!hb.ordered(5, 3));
    }

    #[test]
    fn hb_rad_side_condition_in_nested_lock_trace() {
        let t = parse_trace(APP_A11).unwrap();
        let hb = hb_relation(&t);
        assert!(hb.ordered(4, 6), "rel(y2)@4 < acq(y2)@6");
        assert!(hb.ordered(3, 7), "hb(w(x)@3, w(x)@7)");
        assert!(hb.ordered(3, 10));
        assert!(hb.unordered(7, 10));
    }

    #[test]
    fn shb_adds_write_read_dependency() {
        let t = parse_trace(FIG2B).unwrap();
        let shb = shb_relation(&t);
        assert!(shb.ordered(1, 4), "w(y)@1 before w(y)@4 via the WRD");
        let hb = hb_relation(&t);
        assert!(hb.unordered(1, 4));
    }

    #[test]
    fn shb_loses_dependency_on_reordered_trace() {
        let t = parse_trace(FIG2C).unwrap();
        let shb = shb_relation(&t);
        assert!(shb.unordered(2, 4), "writes on y stay unordered");
    }

    #[test]
    fn shb_without_reads_equals_hb() {
        let t = parse_trace("1,T1,WR,x\n2,T2,WR,y\n3,T1,LK,m\n4,T1,UK,m\n5,T2,LK,m\n6,T2,WR,x").unwrap();
        assert_eq!(shb_relation(&t), hb_relation(&t));
    }

    #[test]
    fn candidates_in_lock_example() {
        let t = parse_trace(SEC4_LOCK).unwrap();
        let hb = hb_relation(&t);
        let c = wrd_candidates(&t, &hb, 8);
        assert_eq!(c.unsync, vec![2]);
        assert_eq!(c.sync, vec![1, 4]);
        assert!(has_initial_write(&t, &hb, 8));
        // no cross-group ordering, pruning changes nothing
        assert_eq!(prune_candidates(&c, &hb), c);
    }

    #[test]
    fn candidates_in_example3() {
        let t = parse_trace(EXAMPLE3).unwrap();
        let hb = hb_relation(&t);
        assert_eq!(wrd_candidates(&t, &hb, 3).all(), vec![2, 6]);
        assert_eq!(wrd_candidates(&t, &hb, 5).all(), vec![1, 4]);
    }

    #[test]
    fn candidates_bounded_in_five_thread_trace() {
        let t = parse_trace(APP_K5).unwrap();
        let hb = hb_relation(&t);
        let c = wrd_candidates(&t, &hb, 13);
        assert_eq!(c.unsync, vec![1, 2]);
        assert_eq!(c.sync, vec![4, 7]);
    }

    #[test]
    fn pruning_drops_covered_synchronized_candidate() {
        let t = parse_trace(APP_A11).unwrap();
        let hb = hb_relation(&t);
        let c = wrd_candidates(&t, &hb, 10);
        assert_eq!(c.unsync, vec![7]);
        assert_eq!(c.sync, vec![3]);
        let pruned = prune_candidates(&c, &hb);
        assert_eq!(pruned.unsync, vec![7]);
        assert!(pruned.sync.is_empty(), "w(x)@3 is covered through w(x)@7");
        assert_eq!(pruned.all(), vec![7]);
    }

    #[test]
    fn strong_shb_cycles_on_cross_reads() {
        let t = parse_trace(EXAMPLE2).unwrap();
        let w = strong_shb(&t).unwrap_err();
        assert_eq!(w.0.len(), 4);
        let mut sorted = w.0.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2, 3, 4]);
    }

    #[test]
    fn strong_shb_exists_for_single_thread() {
        let t = parse_trace("1,T1,WR,x\n2,T1,RD,x\n3,T1,WR,x").unwrap();
        let order = strong_shb(&t).unwrap();
        assert_eq!(order, shb_relation(&t));
    }

    #[test]
    fn strong_shb_exists_for_reordered_three_thread_trace() {
        let t = parse_trace(FIG3C).unwrap();
        assert!(strong_shb(&t).is_ok());
    }

    #[test]
    fn someshb_enumeration_counts() {
        // Four combinations, one cyclic.
        let t = parse_trace(EXAMPLE3).unwrap();
        let instances = enumerate_someshb(&t).unwrap();
        assert_eq!(instances.len(), 3);
        let hb = hb_relation(&t);
        let shb = shb_relation(&t);
        assert!(instances.iter().any(|i| i.order == hb));
        assert!(instances.iter().any(|i| i.order == shb));

        // The single combination is cyclic.
        let t = parse_trace(EXAMPLE2).unwrap();
        assert!(enumerate_someshb(&t).unwrap().is_empty());

        // No reads: exactly the happens-before relation.
        let t = parse_trace("1,T1,WR,x\n2,T2,WR,x").unwrap();
        let instances = enumerate_someshb(&t).unwrap();
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].order, hb_relation(&t));
    }

    #[test]
    fn product_cap_is_enforced() {
        let t = parse_trace(EXAMPLE3).unwrap();
        let err = enumerate_someshb_with_cap(&t, 3).unwrap_err();
        assert_eq!(
            err,
            RelationError::CandidateProductTooLarge { product: 4, cap: 3 }
        );
    }

    #[test]
    fn oracle_verdicts_on_reordered_traces() {
        // Reordered three-thread trace: the x pair survives every choice,
        // the y pair goes away under one of them.
        let t = parse_trace(FIG3C).unwrap();
        let cap = DEFAULT_PRODUCT_CAP;
        assert_eq!(oracle_classify(&t, 2, 5, cap).unwrap(), OracleVerdict::Guaranteed);
        assert_eq!(oracle_classify(&t, 1, 4, cap).unwrap(), OracleVerdict::Maybe);

        let t = parse_trace(FIG2C).unwrap();
        assert_eq!(oracle_classify(&t, 2, 4, cap).unwrap(), OracleVerdict::Maybe);
        // ordered pair
        assert_eq!(oracle_classify(&t, 2, 3, cap).unwrap(), OracleVerdict::NotAnHbRace);
    }

    #[test]
    fn initial_write_cases() {
        let t = parse_trace(EXAMPLE2).unwrap();
        let hb = hb_relation(&t);
        assert!(!has_initial_write(&t, &hb, 1), "nothing precedes r(y)@1");
        let t = parse_trace("1,T1,WR,x\n2,T1,RD,x").unwrap();
        let hb = hb_relation(&t);
        assert!(has_initial_write(&t, &hb, 2));
    }
}
