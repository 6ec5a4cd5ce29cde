//! Removal of argument data edges that the callee ignores.

use std::collections::BTreeMap;

use super::summary::FunctionSummary;
use super::{remove_logged, Audit, Pass};
use crate::frontend::{CallKind, DiagClass, Diagnostic, FuncId, RepoModel, StmtId};
use crate::udg::{argument_bindings, NodeRef, Tau, UdgEdge, UnifiedDependencyGraph};

/// Whether argument `arg` of call `call` at `stmt` may reach the callee's result.
fn binding_kept(model: &RepoModel, g: &UnifiedDependencyGraph, summaries: &BTreeMap<FuncId, FunctionSummary>, stmt: StmtId, call: usize, arg: usize, diags: &mut Vec<Diagnostic>) -> bool {
    let site = &model.stmt(stmt).calls[call];
    if site.kind != CallKind::Method {
        return true;
    }
    let targets: Vec<NodeRef> = g.call_targets(stmt, call).collect();
    if targets.is_empty() {
        return true;
    }
    for t in targets {
        let Some(f) = t.stmt().and_then(|s| model.func_of_entry(s)) else { return true };
        let decl = model.func(f);
        if decl.params.len() != site.args.len() {
            let s = model.stmt(stmt);
            diags.push(
                Diagnostic::new("enhance", DiagClass::Info, format!("arity mismatch: `{}` passes {} arguments to {}", site.text, site.args.len(), decl.signature.render()))
                    .at(&model.file(s.file).path, Some(s.line_span.start)),
            );
            return true;
        }
        match summaries.get(&f) {
            Some(sum) if !sum.at(decl, arg) => {}
            _ => return true,
        }
    }
    false
}

/// Decides one data edge; edges not bound to call arguments are kept.
pub fn edge_kept(model: &RepoModel, g: &UnifiedDependencyGraph, summaries: &BTreeMap<FuncId, FunctionSummary>, e: &UdgEdge, diags: &mut Vec<Diagnostic>) -> bool {
    if e.tau != Tau::DataDependency {
        return true;
    }
    let (Some(dst), Some(v)) = (e.dst.stmt(), e.variable.as_deref()) else { return true };
    if model.owner_func(dst).is_none() {
        return true;
    }
    match argument_bindings(model, dst, v) {
        None => true,
        Some(bs) => bs.into_iter().any(|(c, i)| binding_kept(model, g, summaries, dst, c, i, diags)),
    }
}

pub fn prune_data_edges(model: &RepoModel, g: &mut UnifiedDependencyGraph, summaries: &BTreeMap<FuncId, FunctionSummary>, audit: &mut Audit, diags: &mut Vec<Diagnostic>) -> usize {
    let drop: Vec<bool> = g.edges.iter().map(|e| !edge_kept(model, g, summaries, e, diags)).collect();
    diags.dedup();
    let mut i = 0;
    remove_logged(g, audit, Pass::Pruning, |_| {
        i += 1;
        drop[i - 1]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enhance::order::compute_analysis_order;
    use crate::enhance::summary::{compute_all_summaries, SummaryConfig};
    use crate::frontend::parse_sources;
    use crate::udg::assemble_original_udg;

    fn run(src: &str) -> (RepoModel, UnifiedDependencyGraph, UnifiedDependencyGraph, Vec<Diagnostic>) {
        let m = parse_sources(vec![("T.java".into(), src.into())]).unwrap();
        let g0 = assemble_original_udg(&m);
        let s = compute_all_summaries(&m, &g0, &compute_analysis_order(&m, &g0), &SummaryConfig::default());
        let mut g = g0.clone();
        let mut d = Vec::new();
        prune_data_edges(&m, &mut g, &s, &mut Audit::default(), &mut d);
        (m, g0, g, d)
    }

    #[test]
    fn ignored_argument_edge_removed() {
        let (m, g0, g, _) = run("class T { int k(int x, int y) { return x; } int f() { int a = 1; int b = 2; int r = k(a, b); return r; } }");
        let f = &m.functions[1];
        let (a, b, r) = (f.body[0], f.body[1], f.body[2]);
        let has = |g: &UnifiedDependencyGraph, s| g.contains_edge(NodeRef::Stmt(s), NodeRef::Stmt(r), Tau::DataDependency);
        assert!(has(&g0, a) && has(&g0, b));
        assert!(has(&g, a));
        assert!(!has(&g, b));
        assert_eq!(g0.edges.len() - g.edges.len(), 1);
    }

    #[test]
    fn identity_callees_remove_nothing() {
        let (_, g0, g, _) = run("class T { int id(int x) { return x; } int f(int a) { return id(a) + id(id(a)); } }");
        assert_eq!(g0.edges, g.edges);
    }

    #[test]
    fn external_and_mixed_reads_kept() {
        let (_, g0, g, _) = run("class T { int k(int x) { return 0; } void f(int a, String s) { System.out.println(s); int r = k(a) + a; } }");
        assert_eq!(g0.edges, g.edges);
    }
}
