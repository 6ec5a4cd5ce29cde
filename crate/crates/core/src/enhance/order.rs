//! Bottom-up analysis order over the function call graph.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::frontend::{FuncId, RepoModel};
use crate::udg::{Tau, UnifiedDependencyGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SccComponent {
    /// Sorted.
    pub members: Vec<FuncId>,
    pub index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisSequence {
    pub components: Vec<SccComponent>,
}

impl AnalysisSequence {
    /// Component index of every function.
    pub fn index_of(&self) -> BTreeMap<FuncId, usize> {
        self.components.iter().flat_map(|c| c.members.iter().map(move |m| (*m, c.index))).collect()
    }
}

/// Caller → callee pairs implied by in-repo call edges.
pub fn function_call_graph(model: &RepoModel, g: &UnifiedDependencyGraph) -> BTreeSet<(FuncId, FuncId)> {
    g.edges
        .iter()
        .filter(|e| e.tau == Tau::Call)
        .filter_map(|e| {
            let caller = model.owner_func(e.src.stmt()?)?;
            let callee = model.func_of_entry(e.dst.stmt()?)?;
            Some((caller, callee))
        })
        .collect()
}

/// Strongly connected components of `n` functions, callees first.
pub fn scc_order(n: usize, calls: &BTreeSet<(FuncId, FuncId)>) -> AnalysisSequence {
    let mut fcg: DiGraph<FuncId, ()> = DiGraph::with_capacity(n, calls.len());
    for i in 0..n {
        fcg.add_node(FuncId(i as u32));
    }
    for (a, b) in calls {
        fcg.add_edge(NodeIndex::new(a.idx()), NodeIndex::new(b.idx()), ());
    }
    // tarjan_scc emits components in reverse topological order of the
    // condensation, so callees come before callers.
    let components = tarjan_scc(&fcg)
        .into_iter()
        .enumerate()
        .map(|(index, c)| {
            let mut members: Vec<FuncId> = c.into_iter().map(|x| fcg[x]).collect();
            members.sort();
            SccComponent { members, index }
        })
        .collect();
    AnalysisSequence { components }
}

pub fn compute_analysis_order(model: &RepoModel, g: &UnifiedDependencyGraph) -> AnalysisSequence {
    scc_order(model.functions.len(), &function_call_graph(model, g))
}
