//! Unified dependency graph: statement nodes joined by control-flow,
//! data-dependency and call edges.

pub mod callgraph;
pub mod cfg;
pub mod ddg;
pub mod dump;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frontend::{RepoModel, StmtId};

pub use callgraph::{build_call_graph, resolve_call, CallResolution};
pub use cfg::build_cfg;
pub use ddg::{argument_bindings, build_ddg};
pub use dump::{to_dot, to_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tau {
    ControlFlow,
    DataDependency,
    Call,
}

impl Tau {
    pub fn as_str(self) -> &'static str {
        match self {
            Tau::ControlFlow => "control_flow",
            Tau::DataDependency => "data_dependency",
            Tau::Call => "call",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    EnhancementAdded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRef {
    Stmt(StmtId),
    /// Index into `UnifiedDependencyGraph::externals`.
    External(u32),
}

impl NodeRef {
    pub fn stmt(self) -> Option<StmtId> {
        match self {
            NodeRef::Stmt(s) => Some(s),
            NodeRef::External(_) => None,
        }
    }
}

/// Stand-in for a callee outside the repository, one per signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalNode {
    pub signature: String,
    pub reflective: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UdgEdge {
    pub src: NodeRef,
    pub dst: NodeRef,
    pub tau: Tau,
    pub variable: Option<String>,
    /// For call edges, the call site index within the source statement.
    pub call_index: Option<usize>,
    pub provenance: Provenance,
}

impl UdgEdge {
    pub fn cf(src: StmtId, dst: StmtId) -> UdgEdge {
        UdgEdge { src: NodeRef::Stmt(src), dst: NodeRef::Stmt(dst), tau: Tau::ControlFlow, variable: None, call_index: None, provenance: Provenance::Original }
    }

    pub fn dd(src: StmtId, dst: StmtId, var: &str) -> UdgEdge {
        UdgEdge { src: NodeRef::Stmt(src), dst: NodeRef::Stmt(dst), tau: Tau::DataDependency, variable: Some(var.to_string()), call_index: None, provenance: Provenance::Original }
    }

    pub fn call(src: StmtId, dst: NodeRef, call_index: usize) -> UdgEdge {
        UdgEdge { src: NodeRef::Stmt(src), dst, tau: Tau::Call, variable: None, call_index: Some(call_index), provenance: Provenance::Original }
    }

    pub fn added(mut self) -> UdgEdge {
        self.provenance = Provenance::EnhancementAdded;
        self
    }

    /// Identity ignoring provenance.
    pub fn key(&self) -> (NodeRef, NodeRef, Tau, Option<&str>, Option<usize>) {
        (self.src, self.dst, self.tau, self.variable.as_deref(), self.call_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphState {
    Original,
    Enhanced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnifiedDependencyGraph {
    pub nodes: BTreeSet<NodeRef>,
    pub edges: Vec<UdgEdge>,
    pub externals: Vec<ExternalNode>,
    pub state: GraphState,
}

impl Default for UnifiedDependencyGraph {
    fn default() -> Self {
        UnifiedDependencyGraph { nodes: BTreeSet::new(), edges: Vec::new(), externals: Vec::new(), state: GraphState::Original }
    }
}

impl UnifiedDependencyGraph {
    /// Returns the node for an external signature, creating it on first use.
    pub fn external(&mut self, signature: &str, reflective: bool) -> NodeRef {
        let k = match self.externals.iter().position(|e| e.signature == signature) {
            Some(k) => k,
            None => {
                self.externals.push(ExternalNode { signature: signature.to_string(), reflective });
                self.externals.len() - 1
            }
        };
        let n = NodeRef::External(k as u32);
        self.nodes.insert(n);
        n
    }

    pub fn external_node(&self, n: NodeRef) -> Option<&ExternalNode> {
        match n {
            NodeRef::External(k) => self.externals.get(k as usize),
            NodeRef::Stmt(_) => None,
        }
    }

    pub fn add_edge(&mut self, e: UdgEdge) {
        self.nodes.insert(e.src);
        self.nodes.insert(e.dst);
        self.edges.push(e);
    }

    /// Sorts edges and drops exact duplicates.
    pub fn normalize(&mut self) {
        self.edges.sort();
        self.edges.dedup_by(|a, b| a.key() == b.key());
    }

    pub fn contains_edge(&self, src: NodeRef, dst: NodeRef, tau: Tau) -> bool {
        self.edges.iter().any(|e| e.src == src && e.dst == dst && e.tau == tau)
    }

    pub fn count(&self, tau: Tau) -> usize {
        self.edges.iter().filter(|e| e.tau == tau).count()
    }

    pub fn adjacency(&self) -> Adjacency {
        let mut a = Adjacency::default();
        for (i, e) in self.edges.iter().enumerate() {
            a.out.entry(e.src).or_default().push(i);
            a.inc.entry(e.dst).or_default().push(i);
        }
        a
    }

    /// Call edges leaving `stmt` for call site `call`.
    pub fn call_targets(&self, stmt: StmtId, call: usize) -> impl Iterator<Item = NodeRef> + '_ {
        self.edges.iter().filter(move |e| e.tau == Tau::Call && e.src == NodeRef::Stmt(stmt) && e.call_index == Some(call)).map(|e| e.dst)
    }
}

/// Edge indices by endpoint.
#[derive(Debug, Default)]
pub struct Adjacency {
    pub out: HashMap<NodeRef, Vec<usize>>,
    pub inc: HashMap<NodeRef, Vec<usize>>,
}

impl Adjacency {
    pub fn outgoing(&self, n: NodeRef) -> &[usize] {
        self.out.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn incoming(&self, n: NodeRef) -> &[usize] {
        self.inc.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Builds G_o: per-function control flow and def-use edges plus the
/// conservative call graph. Argument data edges are the def-use edges
/// whose variable is read only inside call arguments; they are kept here
/// and filtered later by summaries. Global statements are not nodes yet.
pub fn assemble_original_udg(model: &RepoModel) -> UnifiedDependencyGraph {
    let per_fn: Vec<(Vec<UdgEdge>, Vec<UdgEdge>)> = model
        .functions
        .par_iter()
        .map(|f| {
            let cfg = build_cfg(f);
            let ddg = build_ddg(model, f, &cfg);
            (cfg.into_iter().map(|(a, b)| UdgEdge::cf(a, b)).collect(), ddg)
        })
        .collect();
    let mut g = UnifiedDependencyGraph::default();
    for f in &model.functions {
        g.nodes.insert(NodeRef::Stmt(f.entry));
        g.nodes.insert(NodeRef::Stmt(f.exit));
        g.nodes.extend(f.body.iter().map(|s| NodeRef::Stmt(*s)));
    }
    for (cf, dd) in per_fn {
        for e in cf.into_iter().chain(dd) {
            g.add_edge(e);
        }
    }
    build_call_graph(model, &mut g);
    g.normalize();
    g
}

/// Successor lists of the control-flow edges, keyed by statement.
pub fn cf_successors(g: &UnifiedDependencyGraph) -> BTreeMap<StmtId, Vec<StmtId>> {
    let mut m: BTreeMap<StmtId, Vec<StmtId>> = BTreeMap::new();
    for e in g.edges.iter().filter(|e| e.tau == Tau::ControlFlow) {
        if let (Some(a), Some(b)) = (e.src.stmt(), e.dst.stmt()) {
            m.entry(a).or_default().push(b);
        }
    }
    m
}
