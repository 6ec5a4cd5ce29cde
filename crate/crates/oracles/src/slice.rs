//! Slices recomputed from a transitive-closure matrix and an explicit
//! (node, hops) state search.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use weft_core::context::{ControlReach, Direction};
use weft_core::frontend::StmtId;
use weft_core::udg::{NodeRef, Tau, UnifiedDependencyGraph};

/// Reflexive-transitive closure of the data edges between statements,
/// Floyd-Warshall style.
pub fn data_reachability(g: &UnifiedDependencyGraph) -> (Vec<StmtId>, Vec<Vec<bool>>) {
    let ids: Vec<StmtId> = g.nodes.iter().filter_map(|n| n.stmt()).collect();
    let pos: BTreeMap<StmtId, usize> = ids.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let n = ids.len();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in g.edges.iter().filter(|e| e.tau == Tau::DataDependency) {
        if let (Some(a), Some(b)) = (e.src.stmt(), e.dst.stmt()) {
            r[pos[&a]][pos[&b]] = true;
        }
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
    (ids, r)
}

pub fn data_closure_oracle(g: &UnifiedDependencyGraph, seeds: &[StmtId], dir: Direction) -> BTreeSet<StmtId> {
    let (ids, r) = data_reachability(g);
    let mut out: BTreeSet<StmtId> = seeds.iter().copied().collect();
    for s in seeds {
        let Some(i) = ids.iter().position(|x| x == s) else { continue };
        for (j, t) in ids.iter().enumerate() {
            let fwd = matches!(dir, Direction::Forward | Direction::Both) && r[i][j];
            let bwd = matches!(dir, Direction::Backward | Direction::Both) && r[j][i];
            if fwd || bwd {
                out.insert(*t);
            }
        }
    }
    out
}

fn one_direction(g: &UnifiedDependencyGraph, s: StmtId, limit: usize, forward: bool, out: &mut ControlReach) {
    let step = |n: StmtId| {
        g.edges.iter().filter(move |e| e.tau != Tau::DataDependency && if forward { e.src == NodeRef::Stmt(n) } else { e.dst == NodeRef::Stmt(n) })
    };
    let mut seen: BTreeSet<(StmtId, usize)> = BTreeSet::from([(s, 0)]);
    let mut q = VecDeque::from([(s, 0usize)]);
    while let Some((n, h)) = q.pop_front() {
        for e in step(n) {
            let other = if forward { e.dst } else { e.src };
            let Some(m) = other.stmt() else { continue };
            let nh = h + usize::from(e.tau == Tau::Call);
            if nh <= limit && seen.insert((m, nh)) {
                q.push_back((m, nh));
            }
        }
    }
    let mut min_h: BTreeMap<StmtId, usize> = BTreeMap::new();
    for (n, h) in &seen {
        let e = min_h.entry(*n).or_insert(*h);
        *e = (*e).min(*h);
    }
    for (n, h) in &min_h {
        for e in step(*n) {
            let other = if forward { e.dst } else { e.src };
            match other {
                NodeRef::External(_) => {
                    out.externals.insert(other);
                }
                NodeRef::Stmt(_) if e.tau == Tau::Call && *h == limit => {
                    out.truncated_at.insert(*n);
                }
                NodeRef::Stmt(_) => {}
            }
        }
        out.statements.insert(*n);
    }
}

/// Statements within `limit` call hops backward and forward of `s`,
/// with external endpoints and the statements where a call edge was
/// cut by the limit.
pub fn control_closure_oracle(g: &UnifiedDependencyGraph, s: StmtId, limit: usize) -> ControlReach {
    let mut out = ControlReach::default();
    one_direction(g, s, limit, false, &mut out);
    one_direction(g, s, limit, true, &mut out);
    out
}
