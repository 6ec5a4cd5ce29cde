//! Backward dataflow context for oracle prompts.

use std::collections::{BTreeSet, VecDeque};

use crate::frontend::{RepoModel, StmtId};
use crate::udg::{NodeRef, Tau, UnifiedDependencyGraph};

pub const DEFAULT_CONTEXT_CAP: usize = 60;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataflowContext {
    /// Source-ordered, excluding the criterion and synthetic nodes.
    pub statements: Vec<StmtId>,
    /// Statements dropped from the oldest end by the cap.
    pub truncated: usize,
}

/// Definitions reaching `s` for `vars`, then their transitive backward
/// data-dependency closure over all variables.
pub fn backward_dataflow_context(model: &RepoModel, g: &UnifiedDependencyGraph, s: StmtId, vars: &BTreeSet<String>, cap: usize) -> DataflowContext {
    let adj = g.adjacency();
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for &i in adj.incoming(NodeRef::Stmt(s)) {
        let e = &g.edges[i];
        if e.tau == Tau::DataDependency && e.variable.as_ref().is_some_and(|v| vars.contains(v)) {
            if let Some(d) = e.src.stmt() {
                if d != s && seen.insert(d) {
                    queue.push_back(d);
                }
            }
        }
    }
    while let Some(n) = queue.pop_front() {
        for &i in adj.incoming(NodeRef::Stmt(n)) {
            let e = &g.edges[i];
            if e.tau != Tau::DataDependency {
                continue;
            }
            if let Some(d) = e.src.stmt() {
                if d != s && seen.insert(d) {
                    queue.push_back(d);
                }
            }
        }
    }
    let mut stmts: Vec<StmtId> = seen.into_iter().filter(|x| !model.stmt(*x).is_synthetic()).collect();
    stmts.sort_by_key(|x| {
        let st = model.stmt(*x);
        (st.file, st.line_span.start, st.byte_span.0)
    });
    let truncated = stmts.len().saturating_sub(cap);
    DataflowContext { statements: stmts.split_off(truncated), truncated }
}

/// Renders a dataflow context with file and class headers.
pub fn render_dataflow(model: &RepoModel, ctx: &DataflowContext) -> String {
    let mut out = String::new();
    if ctx.truncated > 0 {
        out.push_str(&format!("// ... {} earlier statements truncated\n", ctx.truncated));
    }
    let mut cur: Option<(crate::frontend::FileId, Option<crate::frontend::ClassId>)> = None;
    for &s in &ctx.statements {
        let st = model.stmt(s);
        let class = model.owner_func(s).map(|f| model.func(f).class);
        if cur.map(|c| c.0) != Some(st.file) {
            out.push_str(&format!("// file: {}\n", model.file(st.file).path));
        }
        if cur != Some((st.file, class)) {
            if let Some(c) = class {
                out.push_str(&format!("// class: {}\n", model.class(c).name));
            }
        }
        cur = Some((st.file, class));
        let file = model.file(st.file);
        for l in st.line_span.lines() {
            out.push_str(&format!("{l}| {}\n", file.line(l)));
        }
    }
    if ctx.statements.is_empty() {
        out.push_str("// (no dataflow context)\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_sources;
    use crate::udg::assemble_original_udg;

    #[test]
    fn chain_and_single_definition() {
        let src = "class T { int f(int p) {\n int x = p;\n int y = x;\n int z = y;\n int w = 5;\n return z + w;\n } }";
        let m = parse_sources(vec![("T.java".into(), src.into())]).unwrap();
        let g = assemble_original_udg(&m);
        let f = &m.functions[0];
        let ret = f.body[4];
        let c = backward_dataflow_context(&m, &g, ret, &BTreeSet::from(["z".to_string()]), 60);
        assert_eq!(c.statements, vec![f.body[0], f.body[1], f.body[2]]);
        let c = backward_dataflow_context(&m, &g, ret, &BTreeSet::from(["w".to_string()]), 60);
        assert_eq!(c.statements, vec![f.body[3]]);
        let c = backward_dataflow_context(&m, &g, ret, &BTreeSet::from(["z".to_string()]), 2);
        assert_eq!(c.truncated, 1);
        assert_eq!(c.statements, vec![f.body[1], f.body[2]]);
        assert!(render_dataflow(&m, &c).contains("// class: T"));
    }
}
