//! Sensitive call sites: calls matching a knowledge-base API or a user sink.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::enhance::site_id;
use crate::frontend::{CallKind, FileId, Owner, Receiver, RepoModel, StmtId};
use crate::knowledge::{CallDescriptor, CweGuideline, KnowledgeBase, UserSinkSpec};
use crate::udg::UnifiedDependencyGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    KnowledgeBase,
    UserSink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveInvocation {
    /// `path:line#k`.
    pub id: String,
    pub statement: StmtId,
    pub call_index: usize,
    pub api: String,
    pub cwes: Vec<String>,
    pub origin: Origin,
    /// Inline guidelines from user sinks.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<CweGuideline>,
}

fn strip_type(t: &str) -> &str {
    let t = t.split('<').next().unwrap_or(t);
    t.trim_end_matches("[]").trim()
}

/// Qualified name of a written type: the in-repo class, a matching
/// single-type import, or the name as written.
fn qualify(model: &RepoModel, file: FileId, written: &str) -> String {
    let t = strip_type(written);
    if let Some(c) = model.resolve_type(t, file) {
        return model.class(c).name.clone();
    }
    let suffix = format!(".{t}");
    model.file(file).imports.iter().find(|i| i.ends_with(&suffix)).cloned().unwrap_or_else(|| t.to_string())
}

fn type_like(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase) && s.chars().any(char::is_lowercase)
}

/// Everything the call at `(stmt, k)` is known to call: the syntactic
/// receiver type plus every in-repo target in the graph.
pub fn call_descriptors(model: &RepoModel, g: &UnifiedDependencyGraph, stmt: StmtId, k: usize) -> Vec<CallDescriptor> {
    let st = model.stmt(stmt);
    let site = &st.calls[k];
    let arity = site.args.len();
    let enclosing = match st.owner {
        Owner::Function(f) => Some(model.func(f).class),
        Owner::Global => model.globals.iter().find(|g| g.statement == stmt).and_then(|g| g.class),
    };
    let mut out = BTreeSet::new();
    let syntactic = match (&site.kind, &site.receiver) {
        (CallKind::Delegating, _) => None,
        (CallKind::Constructor, Receiver::Static(t)) => Some((Some(qualify(model, st.file, t)), "<init>".to_string())),
        (CallKind::Constructor, _) => Some((Some(qualify(model, st.file, &site.name)), "<init>".to_string())),
        (_, Receiver::Static(t)) | (_, Receiver::Value(Some(t))) => Some((Some(qualify(model, st.file, t)), site.name.clone())),
        (_, Receiver::Implicit) | (_, Receiver::This) => Some((enclosing.map(|c| model.class(c).name.clone()), site.name.clone())),
        (_, Receiver::Super) => {
            let sup = enclosing.and_then(|c| model.class(c).supertypes.first().cloned());
            Some((sup, site.name.clone()))
        }
        (_, Receiver::Value(None)) => {
            // `Runtime.getRuntime().exec(..)`: a chain rooted at a type name.
            let head = site.text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$')).next().unwrap_or("");
            let q = (type_like(head) && site.text[head.len()..].starts_with('.')).then(|| qualify(model, st.file, head));
            Some((q, site.name.clone()))
        }
    };
    if let Some((qualifier, method)) = syntactic {
        out.insert(CallDescriptor { qualifier, method, arity });
    }
    for t in g.call_targets(stmt, k) {
        if let Some(f) = t.stmt().and_then(|s| model.func_of_entry(s)) {
            let d = model.func(f);
            let method = if d.is_ctor { "<init>".to_string() } else { d.name.clone() };
            out.insert(CallDescriptor { qualifier: Some(model.class(d.class).name.clone()), method, arity: d.params.len() });
        }
    }
    out.into_iter().collect()
}

/// One invocation per matching call site, in statement order, carrying
/// every CWE mapped by the knowledge base and the user sinks.
pub fn find_sensitive_invocations(model: &RepoModel, g: &UnifiedDependencyGraph, kb: &KnowledgeBase, sinks: &[UserSinkSpec]) -> Vec<SensitiveInvocation> {
    let sink_patterns: Vec<_> = sinks.iter().filter_map(|s| s.pattern().ok().map(|p| (s, p))).collect();
    let mut out = Vec::new();
    let mut order: Vec<StmtId> = model.statements.iter().filter(|s| !s.calls.is_empty()).map(|s| s.id).collect();
    order.sort_by_key(|s| {
        let st = model.stmt(*s);
        (st.file, st.line_span.start, st.byte_span.0, *s)
    });
    for s in order {
        for k in 0..model.stmt(s).calls.len() {
            let descs = call_descriptors(model, g, s, k);
            let mut cwes: Vec<String> = Vec::new();
            let mut api = None;
            let mut origin = Origin::KnowledgeBase;
            let mut overrides = Vec::new();
            for e in kb.matching(&descs) {
                api.get_or_insert_with(|| e.api.clone());
                cwes.extend(e.cwes.iter().cloned());
            }
            for (spec, p) in &sink_patterns {
                if descs.iter().any(|d| p.matches(d)) {
                    if api.is_none() {
                        origin = Origin::UserSink;
                        api = Some(spec.function.clone());
                    }
                    cwes.push(spec.cwe.clone());
                    overrides.extend(spec.override_guideline());
                }
            }
            let Some(api) = api else { continue };
            let mut seen = BTreeSet::new();
            cwes.retain(|c| seen.insert(c.clone()));
            out.push(SensitiveInvocation { id: site_id(model, s, k), statement: s, call_index: k, api, cwes, origin, overrides });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_sources;
    use crate::knowledge::parse_sinks;
    use crate::udg::assemble_original_udg;

    fn run(src: &str, sinks: &str) -> (RepoModel, Vec<SensitiveInvocation>) {
        let m = parse_sources(vec![("T.java".into(), src.into())]).unwrap();
        let g = assemble_original_udg(&m);
        let sinks = if sinks.is_empty() { Vec::new() } else { parse_sinks(sinks).unwrap() };
        let inv = find_sensitive_invocations(&m, &g, &KnowledgeBase::starter(), &sinks);
        (m, inv)
    }

    #[test]
    fn runtime_exec_chain() {
        let (_, inv) = run("class T { void f(String cmd) throws Exception { Runtime.getRuntime().exec(cmd); } }", "");
        assert_eq!(inv.len(), 1);
        assert_eq!(inv[0].cwes, vec!["CWE-78"]);
        assert_eq!(inv[0].api, "java.lang.Runtime.exec");
        assert_eq!(inv[0].origin, Origin::KnowledgeBase);
    }

    #[test]
    fn typed_receiver_and_constructor() {
        let src = "import java.sql.Statement; import java.io.File;
            class T { void f(Statement st, String q, String p) throws Exception { String r = st.executeQuery(q).toString(); File x = new File(p); } }";
        let (_, inv) = run(src, "");
        let apis: Vec<&str> = inv.iter().map(|i| i.api.as_str()).collect();
        assert_eq!(apis, vec!["java.sql.Statement.executeQuery", "java.io.File.<init>"]);
    }

    #[test]
    fn user_sink_call_sites() {
        let src = "package com.acme;
            class MyDao { String rawQuery(String q) { return q; } }
            class Svc { MyDao dao; void a(String x) { dao.rawQuery(x); } void b(String y) { String r = dao.rawQuery(\"k\" + y); dao.rawQuery(r); } }";
        let (_, inv) = run(src, r#"{"sinks":[{"function":"MyDao.rawQuery","cwe":"CWE-89"}]}"#);
        assert_eq!(inv.len(), src.matches("dao.rawQuery(").count());
        assert!(inv.iter().all(|i| i.origin == Origin::UserSink && i.cwes == ["CWE-89"]));
    }

    #[test]
    fn unrelated_repo_has_none() {
        let (_, inv) = run("class T { int f(int a) { return Math.abs(a); } }", "");
        assert!(inv.is_empty());
    }
}
