//! Oracle-assisted call-edge enhancement for polymorphic and reflective sites.

use std::collections::{BTreeMap, BTreeSet};

use super::dataflow::{backward_dataflow_context, render_dataflow};
use super::oracle::{OracleQuery, QueryKind, ResolutionOracle};
use super::prompts::{parse_class, parse_feasible, parse_method, polymorphism_prompt, reflection_class_prompt, reflection_method_prompt};
use super::{add_logged, remove_logged, site_id, Audit, Pass};
use crate::frontend::{ClassId, DiagClass, Diagnostic, FuncId, RepoModel, Src, StmtId};
use crate::udg::callgraph::REFLECTIVE_INVOCATIONS;
use crate::udg::{NodeRef, Tau, UdgEdge, UnifiedDependencyGraph};

fn diag(model: &RepoModel, stmt: StmtId, class: DiagClass, msg: String) -> Diagnostic {
    let s = model.stmt(stmt);
    Diagnostic::new("enhance", class, msg).at(&model.file(s.file).path, Some(s.line_span.start))
}

/// Call sites in (file, line, statement, index) order with their targets.
fn sites(model: &RepoModel, g: &UnifiedDependencyGraph) -> Vec<((StmtId, usize), Vec<NodeRef>)> {
    let mut m: BTreeMap<(StmtId, usize), Vec<NodeRef>> = BTreeMap::new();
    for e in g.edges.iter().filter(|e| e.tau == Tau::Call) {
        if let (Some(s), Some(k)) = (e.src.stmt(), e.call_index) {
            m.entry((s, k)).or_default().push(e.dst);
        }
    }
    let mut v: Vec<_> = m.into_iter().collect();
    v.sort_by_key(|((s, k), _)| {
        let st = model.stmt(*s);
        (st.file, st.line_span.start, *s, *k)
    });
    v
}

/// `class X extends Y` lines for the candidates' classes and their ancestors.
pub fn hierarchy_text(model: &RepoModel, classes: &BTreeSet<ClassId>) -> String {
    let mut rel: BTreeSet<ClassId> = classes.clone();
    for c in classes {
        rel.extend(model.hierarchy.all_supertypes(*c));
    }
    let mut lines = Vec::new();
    for c in &rel {
        let cd = model.class(*c);
        let sups: Vec<&ClassId> = model.hierarchy.edges.iter().filter(|(s, _)| s == c).map(|(_, t)| t).collect();
        let kw = if cd.is_interface { "interface" } else { "class" };
        let mut ext = Vec::new();
        let mut imp = Vec::new();
        for t in sups {
            let td = model.class(*t);
            if td.is_interface && !cd.is_interface {
                imp.push(td.name.clone());
            } else {
                ext.push(td.name.clone());
            }
        }
        let mut l = format!("{kw} {}", cd.name);
        if !ext.is_empty() {
            l.push_str(&format!(" extends {}", ext.join(", ")));
        }
        if !imp.is_empty() {
            l.push_str(&format!(" implements {}", imp.join(", ")));
        }
        lines.push(l);
    }
    lines.join("\n")
}

/// Prunes infeasible targets at sites with two or more in-repo targets.
/// Returns the number of oracle queries issued.
pub fn enhance_polymorphic_calls(
    model: &RepoModel,
    g: &mut UnifiedDependencyGraph,
    oracle: &mut dyn ResolutionOracle,
    cap: usize,
    audit: &mut Audit,
    diags: &mut Vec<Diagnostic>,
) -> usize {
    let mut queries = 0;
    for ((stmt, k), targets) in sites(model, g) {
        let funcs: BTreeMap<String, FuncId> = targets.iter().filter_map(|t| t.stmt().and_then(|s| model.func_of_entry(s))).map(|f| (model.func(f).signature.render(), f)).collect();
        if funcs.len() < 2 {
            continue;
        }
        let call = &model.stmt(stmt).calls[k];
        let vars: BTreeSet<String> = call.recv_sources.iter().filter_map(|s| if let Src::Var(v) = s { Some(v.clone()) } else { None }).collect();
        let ctx = backward_dataflow_context(model, g, stmt, &vars, cap);
        let candidates: Vec<String> = funcs.keys().cloned().collect();
        let classes: BTreeSet<ClassId> = funcs.values().map(|f| model.func(*f).class).collect();
        let prompt = polymorphism_prompt(&render_dataflow(model, &ctx), &model.stmt(stmt).text, &candidates, &hierarchy_text(model, &classes));
        let q = OracleQuery { model, site: site_id(model, stmt, k), kind: QueryKind::Polymorphism, prompt, stmt, call_index: k, dataflow: &ctx.statements, options: &candidates };
        queries += 1;
        let feasible = match oracle.ask(&q) {
            Ok(r) => match parse_feasible(&r, &candidates) {
                Ok(f) => f,
                Err(e) => {
                    diags.push(diag(model, stmt, DiagClass::Oracle, format!("polymorphic call `{}`: {e}; keeping all targets", call.text)));
                    continue;
                }
            },
            Err(e) => {
                let class = if e.is_fatal() { DiagClass::OracleFatal } else { DiagClass::Oracle };
                diags.push(diag(model, stmt, class, format!("polymorphic call `{}`: {e}; keeping all targets", call.text)));
                continue;
            }
        };
        let drop: BTreeSet<NodeRef> = funcs.iter().filter(|(sig, _)| !feasible.contains(sig)).map(|(_, f)| NodeRef::Stmt(model.func(*f).entry)).collect();
        remove_logged(g, audit, Pass::Polymorphism, |e| e.tau == Tau::Call && e.src == NodeRef::Stmt(stmt) && e.call_index == Some(k) && drop.contains(&e.dst));
    }
    queries
}

fn class_methods(model: &RepoModel, c: ClassId, ctors: bool) -> BTreeMap<String, FuncId> {
    model
        .class(c)
        .methods
        .iter()
        .map(|m| model.func(*m))
        .filter(|f| !f.is_initializer && !f.is_abstract && f.is_ctor == ctors)
        .map(|f| (f.signature.render(), f.id))
        .collect()
}

/// Resolves `invoke`/`newInstance` sites whose only knowledge is a
/// reflective external edge. Returns the number of oracle queries issued.
pub fn enhance_reflective_calls(
    model: &RepoModel,
    g: &mut UnifiedDependencyGraph,
    oracle: &mut dyn ResolutionOracle,
    cap: usize,
    audit: &mut Audit,
    diags: &mut Vec<Diagnostic>,
) -> usize {
    let mut queries = 0;
    let class_list: Vec<String> = {
        let mut v: Vec<String> = model.classes.iter().map(|c| c.name.clone()).collect();
        v.sort();
        v
    };
    for ((stmt, k), targets) in sites(model, g) {
        let call = &model.stmt(stmt).calls[k];
        if !REFLECTIVE_INVOCATIONS.contains(&call.name.as_str()) {
            continue;
        }
        let Some(ext) = targets.iter().copied().find(|t| g.external_node(*t).is_some_and(|x| x.reflective)) else { continue };
        let st = model.stmt(stmt);
        let ctx = backward_dataflow_context(model, g, stmt, &st.uses, cap);
        let df = render_dataflow(model, &ctx);
        let site = site_id(model, stmt, k);
        let fail = |diags: &mut Vec<Diagnostic>, class: DiagClass, why: String| {
            diags.push(diag(model, stmt, class, format!("reflective call `{}`: {why}; keeping external edge", call.text)));
        };

        let prompt = reflection_class_prompt(&df, &st.text, &class_list);
        let q = OracleQuery { model, site: site.clone(), kind: QueryKind::ReflectionClass, prompt, stmt, call_index: k, dataflow: &ctx.statements, options: &class_list };
        queries += 1;
        let class = match oracle.ask(&q) {
            Ok(r) => match parse_class(&r, &class_list) {
                Ok(c) => c,
                Err(e) => {
                    fail(diags, DiagClass::Oracle, format!("unknown class: {e}"));
                    continue;
                }
            },
            Err(e) => {
                fail(diags, if e.is_fatal() { DiagClass::OracleFatal } else { DiagClass::Oracle }, e.to_string());
                continue;
            }
        };
        let Some(cid) = model.class_by_name(&class) else { continue };
        let methods = class_methods(model, cid, call.name == "newInstance");
        if methods.is_empty() {
            fail(diags, DiagClass::Oracle, format!("class {class} offers no candidate members"));
            continue;
        }
        let options: Vec<String> = methods.keys().cloned().collect();
        let prompt = reflection_method_prompt(&df, &st.text, &class, &options);
        let q = OracleQuery { model, site, kind: QueryKind::ReflectionMethod, prompt, stmt, call_index: k, dataflow: &ctx.statements, options: &options };
        queries += 1;
        let method = match oracle.ask(&q) {
            Ok(r) => match parse_method(&r, &options) {
                Ok(m) => m,
                Err(e) => {
                    fail(diags, DiagClass::Oracle, format!("unknown method: {e}"));
                    continue;
                }
            },
            Err(e) => {
                fail(diags, if e.is_fatal() { DiagClass::OracleFatal } else { DiagClass::Oracle }, e.to_string());
                continue;
            }
        };
        let f = methods[&method];
        remove_logged(g, audit, Pass::Reflection, |e| e.tau == Tau::Call && e.src == NodeRef::Stmt(stmt) && e.call_index == Some(k) && e.dst == ext);
        add_logged(g, UdgEdge::call(stmt, NodeRef::Stmt(model.func(f).entry), k).added(), audit, Pass::Reflection);
    }
    queries
}
