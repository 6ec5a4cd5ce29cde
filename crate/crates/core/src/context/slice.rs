//! Reachability closures over edge subsets of the graph.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::frontend::StmtId;
use crate::udg::{Adjacency, NodeRef, Tau, UnifiedDependencyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

fn dd_closure_one(g: &UnifiedDependencyGraph, adj: &Adjacency, seeds: &[StmtId], forward: bool, out: &mut BTreeSet<StmtId>) {
    let mut seen: BTreeSet<StmtId> = seeds.iter().copied().collect();
    let mut queue: VecDeque<StmtId> = seeds.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        let idx = if forward { adj.outgoing(NodeRef::Stmt(n)) } else { adj.incoming(NodeRef::Stmt(n)) };
        for &i in idx {
            let e = &g.edges[i];
            if e.tau != Tau::DataDependency {
                continue;
            }
            let next = if forward { e.dst } else { e.src };
            if let Some(m) = next.stmt() {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
    }
    out.extend(seen);
}

/// Data-dependency closure from `seeds`, seeds included.
pub fn data_closure(g: &UnifiedDependencyGraph, adj: &Adjacency, seeds: &[StmtId], dir: Direction) -> BTreeSet<StmtId> {
    let mut out = BTreeSet::new();
    if matches!(dir, Direction::Forward | Direction::Both) {
        dd_closure_one(g, adj, seeds, true, &mut out);
    }
    if matches!(dir, Direction::Backward | Direction::Both) {
        dd_closure_one(g, adj, seeds, false, &mut out);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControlReach {
    pub statements: BTreeSet<StmtId>,
    /// External callees reached by the forward walk.
    pub externals: BTreeSet<NodeRef>,
    /// Statements where a call edge was not followed because of the hop limit.
    pub truncated_at: BTreeSet<StmtId>,
}

/// Minimum call-edge hops to every node reachable in one direction;
/// control-flow edges are free.
fn hop_walk(g: &UnifiedDependencyGraph, adj: &Adjacency, s: StmtId, hop_limit: usize, forward: bool, reach: &mut ControlReach) {
    let mut best: HashMap<StmtId, usize> = HashMap::new();
    let mut dq: VecDeque<(StmtId, usize)> = VecDeque::new();
    best.insert(s, 0);
    dq.push_back((s, 0));
    while let Some((n, h)) = dq.pop_front() {
        if best.get(&n).is_some_and(|b| *b < h) {
            continue;
        }
        let idx = if forward { adj.outgoing(NodeRef::Stmt(n)) } else { adj.incoming(NodeRef::Stmt(n)) };
        for &i in idx {
            let e = &g.edges[i];
            let cost = match e.tau {
                Tau::ControlFlow => 0,
                Tau::Call => 1,
                Tau::DataDependency => continue,
            };
            let next = if forward { e.dst } else { e.src };
            let Some(m) = next.stmt() else {
                reach.externals.insert(next);
                continue;
            };
            let nh = h + cost;
            if nh > hop_limit {
                reach.truncated_at.insert(n);
                continue;
            }
            if best.get(&m).is_none_or(|b| nh < *b) {
                best.insert(m, nh);
                if cost == 0 {
                    dq.push_front((m, nh));
                } else {
                    dq.push_back((m, nh));
                }
            }
        }
    }
    reach.statements.extend(best.into_keys());
}

/// Backward closure over reversed control-flow and call edges plus the
/// forward closure over control-flow and call edges, each call edge
/// costing one hop.
pub fn control_closure(g: &UnifiedDependencyGraph, adj: &Adjacency, s: StmtId, hop_limit: usize) -> ControlReach {
    let mut reach = ControlReach::default();
    hop_walk(g, adj, s, hop_limit, false, &mut reach);
    hop_walk(g, adj, s, hop_limit, true, &mut reach);
    reach
}
