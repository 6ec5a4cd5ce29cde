//! G_o → G_e: global nodes, oracle-assisted call edges, labeled jumps and
//! summary-based pruning of argument data edges.

pub mod calls;
pub mod dataflow;
pub mod globals;
pub mod oracle;
pub mod order;
pub mod prompts;
pub mod prune;
pub mod summary;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frontend::{resolve_label_targets, DiagClass, Diagnostic, FuncId, JumpTarget, RepoModel};
use crate::udg::{GraphState, NodeRef, Tau, UdgEdge, UnifiedDependencyGraph};

pub use calls::{enhance_polymorphic_calls, enhance_reflective_calls};
pub use dataflow::{backward_dataflow_context, render_dataflow, DataflowContext, DEFAULT_CONTEXT_CAP};
pub use globals::add_global_nodes;
pub use oracle::{OracleError, OracleQuery, QueryKind, ResolutionOracle};
pub use order::{compute_analysis_order, function_call_graph, AnalysisSequence, SccComponent};
pub use prune::prune_data_edges;
pub use summary::{alias_sets, compute_all_summaries, compute_function_summary, fixed_point_scc, AliasSets, FunctionSummary, SummaryConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pass {
    Globals,
    Polymorphism,
    Reflection,
    LabeledJumps,
    Pruning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditOp {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub op: AuditOp,
    pub tau: Tau,
    pub src: NodeRef,
    pub dst: NodeRef,
    pub variable: Option<String>,
    pub pass: Pass,
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    pub entries: Vec<AuditEntry>,
}

impl Audit {
    pub fn record(&mut self, op: AuditOp, e: &UdgEdge, pass: Pass) {
        self.entries.push(AuditEntry { op, tau: e.tau, src: e.src, dst: e.dst, variable: e.variable.clone(), pass });
    }

    /// (added, removed) per edge type.
    pub fn totals(&self) -> BTreeMap<Tau, (usize, usize)> {
        let mut m: BTreeMap<Tau, (usize, usize)> = BTreeMap::new();
        for e in &self.entries {
            let t = m.entry(e.tau).or_default();
            match e.op {
                AuditOp::Add => t.0 += 1,
                AuditOp::Remove => t.1 += 1,
            }
        }
        m
    }

    pub fn count(&self, op: AuditOp, tau: Tau, pass: Option<Pass>) -> usize {
        self.entries.iter().filter(|e| e.op == op && e.tau == tau && pass.is_none_or(|p| p == e.pass)).count()
    }
}

/// Adds `e` unless an edge with the same key exists; returns whether it was added.
pub(crate) fn add_logged(g: &mut UnifiedDependencyGraph, e: UdgEdge, audit: &mut Audit, pass: Pass) -> bool {
    if g.edges.iter().any(|x| x.key() == e.key()) {
        return false;
    }
    audit.record(AuditOp::Add, &e, pass);
    g.add_edge(e);
    true
}

/// Removes every edge matching `pred`, logging each removal.
pub(crate) fn remove_logged(g: &mut UnifiedDependencyGraph, audit: &mut Audit, pass: Pass, mut pred: impl FnMut(&UdgEdge) -> bool) -> usize {
    let before = g.edges.len();
    g.edges.retain(|e| {
        if pred(e) {
            audit.record(AuditOp::Remove, e, pass);
            false
        } else {
            true
        }
    });
    before - g.edges.len()
}

/// Stable call-site key, `path:line#index`.
pub fn site_id(model: &RepoModel, stmt: crate::frontend::StmtId, call: usize) -> String {
    let s = model.stmt(stmt);
    format!("{}:{}#{}", model.file(s.file).path, s.line_span.start, call)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceConfig {
    pub context_cap: usize,
    pub polymorphism: bool,
    pub reflection: bool,
    pub labeled_jumps: bool,
    pub pruning: bool,
    pub summary: SummaryConfig,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig { context_cap: DEFAULT_CONTEXT_CAP, polymorphism: true, reflection: true, labeled_jumps: true, pruning: true, summary: SummaryConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub graph: UnifiedDependencyGraph,
    pub summaries: BTreeMap<FuncId, FunctionSummary>,
    pub order: AnalysisSequence,
    pub audit: Audit,
    pub diagnostics: Vec<Diagnostic>,
    pub jump_targets: Vec<JumpTarget>,
    pub oracle_queries: usize,
}

impl Enhanced {
    /// True when some oracle call failed at the transport level.
    pub fn oracle_fatal(&self) -> bool {
        self.diagnostics.iter().any(|d| d.class == DiagClass::OracleFatal)
    }
}

/// CF edge from each labeled jump to its resolved successor.
pub fn reconstruct_labeled_jumps(g: &mut UnifiedDependencyGraph, targets: &[JumpTarget], audit: &mut Audit) {
    for t in targets {
        add_logged(g, UdgEdge::cf(t.jump, t.resolved_successor).added(), audit, Pass::LabeledJumps);
    }
}

/// Runs all passes over a copy of `g_o`.
pub fn enhance(model: &RepoModel, g_o: &UnifiedDependencyGraph, oracle: &mut dyn ResolutionOracle, cfg: &EnhanceConfig) -> Enhanced {
    let mut g = g_o.clone();
    let mut audit = Audit::default();
    let mut diagnostics = Vec::new();
    let mut queries = 0;
    add_global_nodes(model, &mut g, &mut audit);
    if cfg.polymorphism {
        queries += enhance_polymorphic_calls(model, &mut g, oracle, cfg.context_cap, &mut audit, &mut diagnostics);
    }
    if cfg.reflection {
        queries += enhance_reflective_calls(model, &mut g, oracle, cfg.context_cap, &mut audit, &mut diagnostics);
    }
    let jump_targets = resolve_label_targets(model).targets;
    if cfg.labeled_jumps {
        reconstruct_labeled_jumps(&mut g, &jump_targets, &mut audit);
    }
    let order = compute_analysis_order(model, &g);
    let summaries = compute_all_summaries(model, &g, &order, &cfg.summary);
    if cfg.pruning {
        prune_data_edges(model, &mut g, &summaries, &mut audit, &mut diagnostics);
    }
    g.normalize();
    g.state = GraphState::Enhanced;
    Enhanced { graph: g, summaries, order, audit, diagnostics, jump_targets, oracle_queries: queries }
}
