//! Strongly connected components from pairwise reachability.

use std::collections::{BTreeMap, BTreeSet};

use weft_core::enhance::AnalysisSequence;
use weft_core::frontend::FuncId;

pub fn reachability(n: usize, edges: &BTreeSet<(FuncId, FuncId)>) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in edges {
        r[a.idx()][b.idx()] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Functions grouped by mutual reachability.
pub fn scc_partition(n: usize, edges: &BTreeSet<(FuncId, FuncId)>) -> BTreeSet<BTreeSet<FuncId>> {
    let r = reachability(n, edges);
    (0..n).map(|i| (0..n).filter(|&j| r[i][j] && r[j][i]).map(|j| FuncId(j as u32)).collect()).collect()
}

/// Functions on a call cycle, self-calls included.
pub fn recursive_functions(n: usize, edges: &BTreeSet<(FuncId, FuncId)>) -> BTreeSet<FuncId> {
    let r = reachability(n, edges);
    let mut out: BTreeSet<FuncId> = edges.iter().filter(|(a, b)| a == b).map(|(a, _)| *a).collect();
    for i in 0..n {
        if (0..n).any(|j| j != i && r[i][j] && r[j][i]) {
            out.insert(FuncId(i as u32));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderViolation {
    Partition { expected: BTreeSet<BTreeSet<FuncId>>, actual: BTreeSet<BTreeSet<FuncId>> },
    Index(usize),
    /// Callee component scheduled after its caller's.
    Edge(FuncId, FuncId),
}

/// Checks `seq` against the reachability partition and that every
/// cross-component edge points to an earlier component.
pub fn check_order(n: usize, edges: &BTreeSet<(FuncId, FuncId)>, seq: &AnalysisSequence) -> Result<(), OrderViolation> {
    let expected = scc_partition(n, edges);
    let actual: BTreeSet<BTreeSet<FuncId>> = seq.components.iter().map(|c| c.members.iter().copied().collect()).collect();
    let covered: usize = seq.components.iter().map(|c| c.members.len()).sum();
    if expected != actual || covered != n {
        return Err(OrderViolation::Partition { expected, actual });
    }
    for (i, c) in seq.components.iter().enumerate() {
        if c.index != i {
            return Err(OrderViolation::Index(i));
        }
    }
    let idx: BTreeMap<FuncId, usize> = seq.index_of();
    for (a, b) in edges {
        if idx[a] != idx[b] && idx[b] > idx[a] {
            return Err(OrderViolation::Edge(*a, *b));
        }
    }
    Ok(())
}
