//! Java-subset frontend: parsing, lowering to statement nodes, type
//! hierarchy and label resolution.
//!
//! Supported: package/import declarations, classes and interfaces (single
//! `extends`, multiple `implements`), nested, local and anonymous classes,
//! fields with initializers, methods, constructors, initializer blocks, and
//! the statements local declaration, expression, return, throw, if/else,
//! while, do-while, for, for-each, switch (colon form), labeled statement,
//! break/continue, block, try/catch/finally, synchronized and assert.
//! Lambdas, method references, enums, records, switch expressions and
//! pattern matching are rejected per file as subset violations.

pub mod ast;
pub mod hierarchy;
pub mod labels;
pub mod lexer;
pub mod lower;
pub mod model;
pub mod parser;

use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use thiserror::Error;

pub use hierarchy::build_type_hierarchy;
pub use labels::{resolve_label_targets, LabelResolution};
pub use model::*;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid glob pattern `{0}`")]
    Glob(String),
    #[error("type hierarchy contains a cycle: {}", .0.join(" -> "))]
    HierarchyCycle(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct FrontendConfig {
    pub extension: String,
    /// Glob patterns over repository-relative paths; empty means everything.
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        FrontendConfig { extension: "java".into(), include: Vec::new(), exclude: Vec::new() }
    }
}

fn globset(patterns: &[String]) -> Result<Option<GlobSet>, FrontendError> {
    if patterns.is_empty() {
        return Ok(None);
    }
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        b.add(Glob::new(p).map_err(|_| FrontendError::Glob(p.clone()))?);
    }
    b.build().map(Some).map_err(|e| FrontendError::Glob(e.to_string()))
}

/// Lists matching source files as sorted, `/`-separated relative paths.
pub fn discover(root: &Path, config: &FrontendConfig) -> Result<Vec<String>, FrontendError> {
    if !root.is_dir() {
        return Err(FrontendError::Io { path: root.to_path_buf(), source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory") });
    }
    let include = globset(&config.include)?;
    let exclude = globset(&config.exclude)?;
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| FrontendError::Io { path: root.to_path_buf(), source: e.into() })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let p = entry.path();
        if p.extension().and_then(|e| e.to_str()) != Some(config.extension.as_str()) {
            continue;
        }
        let rel = p.strip_prefix(root).unwrap_or(p).components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if include.as_ref().is_some_and(|g| !g.is_match(&rel)) || exclude.as_ref().is_some_and(|g| g.is_match(&rel)) {
            continue;
        }
        out.push(rel);
    }
    out.sort();
    Ok(out)
}

pub fn parse_repository(root: &Path, config: &FrontendConfig) -> Result<RepoModel, FrontendError> {
    let paths = discover(root, config)?;
    let files = paths
        .into_iter()
        .map(|rel| {
            let full = root.join(&rel);
            std::fs::read_to_string(&full).map(|t| (rel, t)).map_err(|source| FrontendError::Io { path: full, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    parse_sources(files)
}

/// Builds a model from in-memory `(path, text)` pairs. Files outside the
/// subset are skipped with a diagnostic.
pub fn parse_sources(mut files: Vec<(String, String)>) -> Result<RepoModel, FrontendError> {
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let parsed: Vec<_> = files.par_iter().map(|(p, t)| (p, t, parser::parse(t))).collect();
    let mut diagnostics = Vec::new();
    let mut ok = Vec::new();
    for (path, text, res) in parsed {
        match res {
            Ok(cu) => ok.push((path.clone(), text.clone(), cu)),
            Err(e) => {
                let what = if e.subset { "subset violation" } else { "syntax error" };
                let d = Diagnostic::new("frontend", DiagClass::Parse, format!("{what}: {}; file skipped", e.message)).at(path, Some(e.line));
                log::warn!("{d}");
                diagnostics.push(d);
            }
        }
    }
    let index = lower::Index::build(ok.iter().map(|(_, _, cu)| cu));
    let mut lw = lower::Lowerer::new(&index);
    for (path, text, cu) in &ok {
        lw.lower_file(path.clone(), text.clone(), cu);
    }
    let mut model = lw.model;
    model.diagnostics = diagnostics;
    for i in 0..model.classes.len() {
        let c = &model.classes[i];
        let resolved = c
            .supertypes_written
            .iter()
            .map(|w| match model.resolve_type(w, c.file) {
                Some(t) => model.class(t).name.clone(),
                None => w.clone(),
            })
            .collect();
        model.classes[i].supertypes = resolved;
    }
    model.hierarchy = build_type_hierarchy(&model)?;
    for d in resolve_label_targets(&model).unresolved {
        log::warn!("{d}");
        model.diagnostics.push(d);
    }
    Ok(model)
}

/// All global statements: field definitions, imports, packages and class headers.
pub fn extract_globals(model: &RepoModel) -> Vec<GlobalDecl> {
    let mut g = model.globals.clone();
    g.sort_by_key(|g| {
        let s = model.stmt(g.statement);
        (s.file, s.line_span.start, s.byte_span.0, s.id)
    });
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(src: &str) -> RepoModel {
        parse_sources(vec![("T.java".into(), src.into())]).unwrap()
    }

    #[test]
    fn minimal_program() {
        let m = one("class T { int f(int a) { int b = a; b = b + 1; return b; } }");
        assert_eq!(m.classes.len(), 1);
        assert_eq!(m.functions.len(), 1);
        let f = &m.functions[0];
        assert_eq!(f.body.len(), 3);
        assert_eq!(m.stmt(f.entry).kind, StmtKind::Entry);
        assert_eq!(m.stmt(f.exit).kind, StmtKind::Exit);
        let s1 = m.stmt(f.body[1]);
        assert_eq!(s1.kind, StmtKind::Assignment);
        assert!(s1.defs.contains("b") && s1.uses.contains("b"));
    }

    #[test]
    fn empty_repository() {
        let m = parse_sources(Vec::new()).unwrap();
        assert!(m.files.is_empty() && m.statements.is_empty() && m.diagnostics.is_empty());
    }

    #[test]
    fn global_rhs_uses_exclude_types_and_calls() {
        let m = one("import java.util.regex.Pattern; class T { static final String Q = \"x\"; static final Pattern P = Pattern.compile(Q); }");
        let p = m.globals.iter().find(|g| g.variable.as_deref() == Some("P")).unwrap();
        assert_eq!(p.rhs_uses.iter().cloned().collect::<Vec<_>>(), vec!["Q".to_string()]);
    }

    #[test]
    fn class_without_fields_has_only_structural_globals() {
        let m = one("package p; class T { void f() {} }");
        let kinds: Vec<_> = extract_globals(&m).iter().map(|g| g.kind).collect();
        assert_eq!(kinds, vec![StmtKind::PackageDecl, StmtKind::ClassDecl]);
    }

    #[test]
    fn field_access_defs_and_uses() {
        let m = one("class T { int x; void f(T a, int[] arr, int i, int v) { a.b = v; this.x = v; arr[i] = v; v = a.b.c; } }");
        let f = &m.functions[0];
        let s = |k: usize| m.stmt(f.body[k]);
        assert_eq!(s(0).defs.iter().cloned().collect::<Vec<_>>(), vec!["a.b"]);
        assert!(s(0).uses.contains("a") && s(0).uses.contains("v"));
        assert!(s(1).defs.contains("x"));
        assert!(s(2).defs.contains("arr") && s(2).uses.contains("arr") && s(2).uses.contains("i"));
        assert!(s(3).uses.contains("a.b.c") && s(3).uses.contains("a"));
    }

    #[test]
    fn subset_violation_skips_file_only() {
        let m = parse_sources(vec![
            ("A.java".into(), "class A { void f() { Runnable r = () -> {}; } }".into()),
            ("B.java".into(), "class B { void g() {} }".into()),
        ])
        .unwrap();
        assert_eq!(m.files.len(), 1);
        assert_eq!(m.diagnostics.len(), 1);
        assert_eq!(m.diagnostics[0].file.as_deref(), Some("A.java"));
    }

    #[test]
    fn call_sites_record_receivers_and_argument_binding() {
        let m = one("class T { String s; void f(String cmd) { Runtime.getRuntime().exec(cmd.trim()); } }");
        let st = m.stmt(m.functions[0].body[0]);
        assert_eq!(st.kind, StmtKind::Call);
        let exec = st.calls.iter().find(|c| c.name == "exec").unwrap();
        let get = st.calls.iter().find(|c| c.name == "getRuntime").unwrap();
        assert_eq!(get.receiver, Receiver::Static("Runtime".into()));
        assert_eq!(exec.args.len(), 1);
        let trim_idx = st.calls.iter().position(|c| c.name == "trim").unwrap();
        let exec_idx = st.calls.iter().position(|c| c.name == "exec").unwrap();
        let cmd = st.use_sites.iter().find(|u| u.var == "cmd").unwrap();
        assert_eq!(cmd.arg, Some((exec_idx, 0)));
        assert_eq!(st.calls[trim_idx].parent, Some((exec_idx, 0)));
    }

    #[test]
    fn nested_and_anonymous_class_methods_are_functions() {
        let m = one("class T { class In { int g() { return 1; } } Object o = new Object() { public String toString() { return \"t\"; } }; }");
        assert_eq!(m.functions.len(), 2);
        assert!(m.classes.iter().any(|c| c.name == "T.In"));
        assert!(m.classes.iter().any(|c| c.name == "T$1"));
        for f in &m.functions {
            assert_eq!(f.id, m.functions[f.id.idx()].id);
        }
    }
}
