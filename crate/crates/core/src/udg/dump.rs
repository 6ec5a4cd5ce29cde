//! Line-oriented text dump and Graphviz export.

use std::fmt::Write;

use super::{NodeRef, UnifiedDependencyGraph};
use crate::frontend::RepoModel;

fn node_id(n: NodeRef) -> String {
    match n {
        NodeRef::Stmt(s) => s.0.to_string(),
        NodeRef::External(k) => format!("x{k}"),
    }
}

/// Nodes ordered by (file, start line, id), externals last.
fn ordered_nodes(model: &RepoModel, g: &UnifiedDependencyGraph) -> Vec<NodeRef> {
    let mut nodes: Vec<NodeRef> = g.nodes.iter().copied().collect();
    nodes.sort_by_key(|n| match n {
        NodeRef::Stmt(s) => {
            let st = model.stmt(*s);
            (0, st.file.0, st.line_span.start, s.0)
        }
        NodeRef::External(k) => (1, 0, 0, *k),
    });
    nodes
}

/// `NODE <id> <file>:<start>-<end> <kind>` then `EDGE <src> <dst> <tau> [<var>]`.
pub fn to_text(model: &RepoModel, g: &UnifiedDependencyGraph) -> String {
    let mut out = String::new();
    for n in ordered_nodes(model, g) {
        match n {
            NodeRef::Stmt(s) => {
                let st = model.stmt(s);
                let _ = writeln!(out, "NODE {} {}:{}-{} {}", s.0, model.file(st.file).path, st.line_span.start, st.line_span.end, st.kind.as_str());
            }
            NodeRef::External(_) => {
                let e = g.external_node(n).expect("external node");
                let kind = if e.reflective { "reflective_external" } else { "external" };
                let _ = writeln!(out, "NODE {} <{}>:0-0 {}", node_id(n), e.signature, kind);
            }
        }
    }
    let mut edges: Vec<String> = g
        .edges
        .iter()
        .map(|e| {
            let mut l = format!("EDGE {} {} {}", node_id(e.src), node_id(e.dst), e.tau.as_str());
            if let Some(v) = &e.variable {
                l.push(' ');
                l.push_str(v);
            }
            l
        })
        .collect();
    edges.sort();
    edges.dedup();
    for l in edges {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

pub fn to_dot(model: &RepoModel, g: &UnifiedDependencyGraph) -> String {
    let mut out = String::from("digraph udg {\n  node [shape=box, fontname=monospace];\n");
    for n in ordered_nodes(model, g) {
        let label = match n {
            NodeRef::Stmt(s) => {
                let st = model.stmt(s);
                format!("{}:{} {}", model.file(st.file).path, st.line_span.start, st.text.lines().next().unwrap_or(""))
            }
            NodeRef::External(_) => g.external_node(n).map(|e| e.signature.clone()).unwrap_or_default(),
        };
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", node_id(n), escape(&label));
    }
    for e in &g.edges {
        let style = match e.tau {
            super::Tau::ControlFlow => "solid",
            super::Tau::DataDependency => "dashed",
            super::Tau::Call => "bold",
        };
        let label = e.variable.as_deref().unwrap_or("");
        let _ = writeln!(out, "  \"{}\" -> \"{}\" [style={style}, label=\"{}\"];", node_id(e.src), node_id(e.dst), escape(label));
    }
    out.push_str("}\n");
    out
}
