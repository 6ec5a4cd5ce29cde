//! Label-flipping identifier rename: every user-declared name gets the
//! prefix of the opposite label. Rewriting works on tokens, so layout,
//! comments and literals are untouched and line numbers are preserved.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::ast::{ClassAst, CompilationUnit, Expr, ExprKind, Member, Stmt, StmtKind};
use crate::frontend::lexer::{tokenize, TokKind, Token};
use crate::frontend::parser::parse;

#[derive(Debug, Error)]
pub enum RenameError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u32, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenameLabel {
    Vulnerable,
    NonVulnerable,
}

impl RenameLabel {
    /// Prefix carrying the opposite label.
    pub fn prefix(self) -> &'static str {
        match self {
            RenameLabel::Vulnerable => "non_vulnerable_",
            RenameLabel::NonVulnerable => "vulnerable_",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameMap {
    pub identifiers: BTreeMap<String, String>,
    /// Old path to new path, for files named after a renamed class.
    pub files: BTreeMap<String, String>,
}

impl RenameMap {
    pub fn file(&self, path: &str) -> String {
        self.files.get(path).cloned().unwrap_or_else(|| path.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameOutput {
    pub files: Vec<(String, String)>,
    pub map: RenameMap,
    /// Names that needed a numeric suffix.
    pub collisions: Vec<String>,
    /// Names left alone: methods that may override a library method and
    /// names a reflective lookup could spell.
    pub kept: Vec<String>,
}

/// Method names inherited from the platform that user code commonly
/// overrides.
const PLATFORM_METHODS: &[&str] = &["main", "toString", "equals", "hashCode", "clone", "finalize", "run", "call", "compareTo", "close", "iterator", "accept", "apply", "test", "get"];

#[derive(Default)]
struct Declared {
    classes: BTreeSet<String>,
    methods: BTreeSet<String>,
    fields: BTreeSet<String>,
    vars: BTreeSet<String>,
    labels: BTreeSet<String>,
    /// Variable or field name to the simple names of its declared types.
    var_types: BTreeMap<String, BTreeSet<String>>,
    /// (class, direct supertypes, declared method names)
    classes_info: Vec<(String, Vec<String>, Vec<String>)>,
    packages: BTreeSet<String>,
}

impl Declared {
    fn var(&mut self, name: &str, ty: &str) {
        self.vars.insert(name.to_string());
        self.var_types.entry(name.to_string()).or_default().insert(ty.rsplit('.').next().unwrap_or(ty).to_string());
    }

    fn class(&mut self, c: &ClassAst) {
        if !c.anonymous {
            self.classes.insert(c.name.clone());
        }
        let supers = c.extends.iter().chain(&c.implements).map(|t| t.simple().to_string()).collect();
        let mut methods = Vec::new();
        for m in &c.members {
            match m {
                Member::Field(f) => {
                    for v in &f.vars {
                        self.fields.insert(v.name.clone());
                        self.var_types.entry(v.name.clone()).or_default().insert(f.ty.simple().to_string());
                        if let Some(e) = &v.init {
                            self.expr(e);
                        }
                    }
                }
                Member::Method(md) => {
                    if !md.is_ctor {
                        self.methods.insert(md.name.clone());
                        methods.push(md.name.clone());
                    }
                    for p in &md.params {
                        self.var(&p.name, p.ty.simple());
                    }
                    if let Some(b) = &md.body {
                        self.stmts(&b.stmts);
                    }
                }
                Member::Class(inner) => self.class(inner),
                Member::Init { body, .. } => self.stmts(&body.stmts),
            }
        }
        self.classes_info.push((c.name.clone(), supers, methods));
    }

    fn stmts(&mut self, ss: &[Stmt]) {
        for s in ss {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Local { ty, vars } => {
                for v in vars {
                    self.var(&v.name, ty.simple());
                    if let Some(e) = &v.init {
                        self.expr(e);
                    }
                }
            }
            StmtKind::Expr(e) | StmtKind::Throw(e) => self.expr(e),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            StmtKind::If { cond, then, els, .. } => {
                self.expr(cond);
                self.stmt(then);
                if let Some(e) = els {
                    self.stmt(e);
                }
            }
            StmtKind::While { cond, body, .. } | StmtKind::DoWhile { body, cond, .. } => {
                self.expr(cond);
                self.stmt(body);
            }
            StmtKind::For { init, cond, update, body } => {
                self.stmts(init);
                if let Some(c) = cond {
                    self.expr(c);
                }
                for u in update {
                    self.expr(u);
                }
                self.stmt(body);
            }
            StmtKind::ForEach { ty, name, iter, body, .. } => {
                self.var(name, ty.simple());
                self.expr(iter);
                self.stmt(body);
            }
            StmtKind::Switch { sel, groups, .. } => {
                self.expr(sel);
                for g in groups {
                    self.stmts(&g.body);
                }
            }
            StmtKind::Labeled { label, body, .. } => {
                self.labels.insert(label.clone());
                self.stmt(body);
            }
            StmtKind::Block(b) => self.stmts(b),
            StmtKind::Try { resources, body, catches, finally } => {
                self.stmts(resources);
                self.stmts(body);
                for c in catches {
                    self.var(&c.name, c.ty.simple());
                    self.stmts(&c.body);
                }
                if let Some(f) = finally {
                    self.stmts(f);
                }
            }
            StmtKind::Sync { lock, body } => {
                self.expr(lock);
                self.stmts(body);
            }
            StmtKind::Assert { cond, msg } => {
                self.expr(cond);
                if let Some(m) = msg {
                    self.expr(m);
                }
            }
            StmtKind::LocalClass(c) => self.class(c),
            StmtKind::Break(_) | StmtKind::Continue(_) | StmtKind::Empty => {}
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::New { args, body, .. } => {
                for a in args {
                    self.expr(a);
                }
                if let Some(b) = body {
                    self.class(b);
                }
            }
            ExprKind::Call { recv, args, .. } => {
                if let Some(r) = recv {
                    self.expr(r);
                }
                for a in args {
                    self.expr(a);
                }
            }
            ExprKind::CtorCall { args, .. } | ExprKind::ArrayLit(args) => {
                for a in args {
                    self.expr(a);
                }
            }
            ExprKind::NewArray { dims, init, .. } => {
                for a in dims.iter().chain(init.iter().flatten()) {
                    self.expr(a);
                }
            }
            ExprKind::Field(a, _) | ExprKind::Cast { expr: a, .. } | ExprKind::InstanceOf { expr: a, .. } | ExprKind::Unary { expr: a, .. } => self.expr(a),
            ExprKind::Index(a, b) | ExprKind::Binary { lhs: a, rhs: b, .. } | ExprKind::Assign { lhs: a, rhs: b, .. } => {
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Cond { cond, then, els } => {
                self.expr(cond);
                self.expr(then);
                self.expr(els);
            }
            ExprKind::Name(_) | ExprKind::This | ExprKind::Super | ExprKind::Lit(_) | ExprKind::ClassLit(_) => {}
        }
    }

    /// Methods of classes with a supertype outside the repository, directly
    /// or through in-repo ancestors, may override library methods.
    fn library_overrides(&self) -> BTreeSet<String> {
        let supers: BTreeMap<&str, Vec<&str>> = self.classes_info.iter().filter(|c| !c.0.is_empty()).map(|c| (c.0.as_str(), c.1.iter().map(String::as_str).collect())).collect();
        let external_ancestor = |start: &[String]| {
            let mut stack: Vec<&str> = start.iter().map(String::as_str).collect();
            let mut seen = BTreeSet::new();
            while let Some(s) = stack.pop() {
                if !seen.insert(s) {
                    continue;
                }
                match supers.get(s) {
                    Some(next) => stack.extend(next.iter().copied()),
                    None if s != "Object" => return true,
                    None => {}
                }
            }
            false
        };
        let mut out: BTreeSet<String> = PLATFORM_METHODS.iter().filter(|m| self.methods.contains(**m)).map(|m| m.to_string()).collect();
        for (_, sup, methods) in &self.classes_info {
            if external_ancestor(sup) {
                out.extend(methods.iter().cloned());
            }
        }
        out
    }
}

fn parse_all(files: &[(String, String)]) -> Result<Vec<(CompilationUnit, Vec<Token>)>, RenameError> {
    files
        .iter()
        .map(|(path, text)| {
            let cu = parse(text).map_err(|e| RenameError::Parse { path: path.clone(), line: e.line, message: e.message })?;
            let toks = tokenize(text).map_err(|e| RenameError::Parse { path: path.clone(), line: e.line, message: e.message })?;
            Ok((cu, toks))
        })
        .collect()
}

const REFLECTIVE_LOOKUPS: &[&str] = &["forName", "loadClass", "getMethod", "getDeclaredMethod", "getField", "getDeclaredField"];

/// Class, method and field names a string literal can spell when the
/// repository looks members up by name: equal to a literal, a qualified
/// literal ending in the name, or a member name starting with a literal.
fn reflective_names(d: &Declared, parsed: &[(CompilationUnit, Vec<Token>)]) -> BTreeSet<String> {
    let toks = || parsed.iter().flat_map(|(_, t)| t.iter());
    if !toks().any(|t| t.kind == TokKind::Ident && REFLECTIVE_LOOKUPS.contains(&t.text.as_str())) {
        return BTreeSet::new();
    }
    let lits: BTreeSet<&str> = toks().filter(|t| t.kind == TokKind::StrLit).map(|t| t.text.trim_matches('"')).filter(|l| !l.is_empty()).collect();
    let mut out = BTreeSet::new();
    for c in &d.classes {
        if lits.iter().any(|l| l == c || l.ends_with(&format!(".{c}")) || l.ends_with(&format!("${c}"))) {
            out.insert(c.clone());
        }
    }
    for m in d.methods.iter().chain(&d.fields) {
        if lits.iter().any(|l| m.starts_with(l)) {
            out.insert(m.clone());
        }
    }
    out
}

/// Renames user-declared identifiers in `files` (path, text). Member names
/// after `.` are renamed only when a repository declaration exists for them
/// and the receiver is not a library type or a variable of one.
pub fn adaptive_rename(files: &[(String, String)], label: RenameLabel) -> Result<RenameOutput, RenameError> {
    let parsed = parse_all(files)?;
    let mut d = Declared::default();
    for (cu, _) in &parsed {
        if let Some((p, _)) = &cu.package {
            d.packages.insert(p.clone());
        }
        for c in &cu.classes {
            d.class(c);
        }
    }
    let mut kept = d.library_overrides();
    kept.extend(reflective_names(&d, &parsed));
    let mut names: BTreeSet<&String> = d.classes.iter().chain(&d.fields).chain(&d.vars).chain(&d.labels).collect();
    names.retain(|n| !kept.contains(*n));
    names.extend(d.methods.iter().filter(|m| !kept.contains(*m)));

    let existing: BTreeSet<&str> = parsed.iter().flat_map(|(_, t)| t.iter()).filter(|t| t.kind == TokKind::Ident).map(|t| t.text.as_str()).collect();
    let mut taken: BTreeSet<String> = existing.iter().map(|s| s.to_string()).collect();
    let mut identifiers = BTreeMap::new();
    let mut collisions = Vec::new();
    for n in names {
        let base = format!("{}{n}", label.prefix());
        let mut new = base.clone();
        let mut k = 1;
        while taken.contains(&new) {
            new = format!("{base}_{k}");
            k += 1;
        }
        if new != base {
            log::warn!("rename collision: `{base}` exists, using `{new}`");
            collisions.push(n.clone());
        }
        taken.insert(new.clone());
        identifiers.insert(n.clone(), new);
    }

    let is_library_type = |s: &str| s.starts_with(char::is_uppercase) && !d.classes.contains(s) && !d.vars.contains(s) && !d.fields.contains(s);
    let library_receiver = |recv: &Token| {
        recv.kind == TokKind::Ident
            && (is_library_type(&recv.text) || d.var_types.get(&recv.text).is_some_and(|ts| !ts.is_empty() && ts.iter().all(|t| is_library_type(t))))
    };

    let mut out_files = Vec::new();
    let mut file_map = BTreeMap::new();
    for ((path, text), (cu, toks)) in files.iter().zip(&parsed) {
        let package_span = cu.package.as_ref().map(|(_, s)| (s.lo, s.hi));
        let mut edits: Vec<(usize, usize, &str)> = Vec::new();
        for (i, t) in toks.iter().enumerate() {
            if t.kind != TokKind::Ident {
                continue;
            }
            let Some(new) = identifiers.get(&t.text) else { continue };
            if package_span.is_some_and(|(lo, hi)| t.start >= lo && t.end <= hi) {
                continue;
            }
            let rename = if let Some(imp) = cu.imports.iter().find(|im| t.start >= im.span.lo && t.end <= im.span.hi) {
                // Only the class segment of an import of a repository package.
                let parent = imp.path.rsplit_once('.').map(|(p, _)| p).unwrap_or("");
                !imp.is_static && !imp.wildcard && imp.path.ends_with(&format!(".{}", t.text)) && d.packages.contains(parent) && d.classes.contains(&t.text) && toks.get(i + 1).is_some_and(|n| n.is(";"))
            } else {
                let after_dot = i > 0 && toks[i - 1].is(".");
                let call = toks.get(i + 1).is_some_and(|n| n.is("("));
                let after_new = i > 0 && toks[i - 1].is("new");
                if after_dot {
                    let recv = &toks[i - 2.min(i)];
                    let declared = if call { d.methods.contains(&t.text) } else { d.fields.contains(&t.text) || d.classes.contains(&t.text) };
                    declared && !library_receiver(recv)
                } else if call && !after_new {
                    d.methods.contains(&t.text) || d.classes.contains(&t.text)
                } else {
                    true
                }
            };
            if rename {
                edits.push((t.start, t.end, new.as_str()));
            }
        }
        let mut s = String::with_capacity(text.len() + edits.len() * 16);
        let mut at = 0;
        for (lo, hi, new) in edits {
            s.push_str(&text[at..lo]);
            s.push_str(new);
            at = hi;
        }
        s.push_str(&text[at..]);
        let new_path = match path.rsplit_once('/') {
            Some((dir, file)) => file.strip_suffix(".java").and_then(|stem| identifiers.get(stem).filter(|_| cu.classes.iter().any(|c| c.name == stem))).map(|n| format!("{dir}/{n}.java")),
            None => path.strip_suffix(".java").and_then(|stem| identifiers.get(stem).filter(|_| cu.classes.iter().any(|c| c.name == stem))).map(|n| format!("{n}.java")),
        };
        let new_path = new_path.unwrap_or_else(|| path.clone());
        if &new_path != path {
            file_map.insert(path.clone(), new_path.clone());
        }
        out_files.push((new_path, s));
    }
    out_files.sort();
    Ok(RenameOutput { files: out_files, map: RenameMap { identifiers, files: file_map }, collisions, kept: kept.into_iter().collect() })
}

/// Renames every `.java` file under `src` into `dst`, copying other files
/// verbatim.
pub fn rename_repository(src: &Path, dst: &Path, label: RenameLabel) -> Result<RenameOutput, RenameError> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| RenameError::Io { path, source }
    };
    let mut java = Vec::new();
    let mut other = Vec::new();
    for e in walkdir::WalkDir::new(src).sort_by_file_name() {
        let e = e.map_err(|e| RenameError::Io { path: src.display().to_string(), source: e.into() })?;
        if !e.file_type().is_file() {
            continue;
        }
        let rel = e.path().strip_prefix(src).unwrap_or(e.path()).components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if e.path().extension().is_some_and(|x| x == "java") {
            java.push((rel, std::fs::read_to_string(e.path()).map_err(io(e.path()))?));
        } else {
            other.push(rel);
        }
    }
    let out = adaptive_rename(&java, label)?;
    for (rel, text) in &out.files {
        let p = dst.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::write(&p, text).map_err(io(&p))?;
    }
    for rel in other {
        let p = dst.join(&rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::copy(src.join(&rel), &p).map_err(io(&p))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_sources;
    use crate::udg::assemble_original_udg;

    fn one(src: &str, label: RenameLabel) -> RenameOutput {
        adaptive_rename(&[("p/A.java".into(), src.into())], label).unwrap()
    }

    #[test]
    fn local_in_vulnerable_sample() {
        let out = one("class A { void f() { int taint; taint = 1; } }", RenameLabel::Vulnerable);
        let text = &out.files[0].1;
        assert!(text.contains("int non_vulnerable_taint;"), "{text}");
        assert!(text.contains("class non_vulnerable_A"));
        assert_eq!(out.files[0].0, "p/non_vulnerable_A.java");
        assert_eq!(out.map.file("p/A.java"), "p/non_vulnerable_A.java");
    }

    #[test]
    fn library_names_literals_and_layout_survive() {
        let src = "package p;\nimport java.util.regex.Pattern;\nclass A {\n  String matcher(String s) { return s; }\n  String f(String s) {\n    // keep matcher here\n    Pattern p = Pattern.compile(\"s\");\n    String r = p.matcher(s).replaceAll(\"x\");\n    return matcher(r) + \"matcher\";\n  }\n  public String toString() { return \"A\"; }\n}\n";
        let out = one(src, RenameLabel::NonVulnerable);
        let text = &out.files[0].1;
        assert_eq!(text.lines().count(), src.lines().count());
        assert!(text.contains("import java.util.regex.Pattern;"));
        assert!(text.contains("p.matcher(vulnerable_s)") || text.contains("vulnerable_p.matcher(vulnerable_s)"), "{text}");
        assert!(text.contains("return vulnerable_matcher(vulnerable_r) + \"matcher\";"), "{text}");
        assert!(text.contains("// keep matcher here"));
        assert!(text.contains("Pattern.compile(\"s\")"));
        assert!(text.contains("public String toString()"));
        assert_eq!(out.kept, vec!["toString".to_string()]);
    }

    #[test]
    fn double_prefix_and_collision() {
        let again = one("class A { int non_vulnerable_x; }", RenameLabel::Vulnerable);
        assert!(again.files[0].1.contains("non_vulnerable_non_vulnerable_x"));
        let clash = one("class A { int x; int non_vulnerable_x; }", RenameLabel::Vulnerable);
        assert_eq!(clash.map.identifiers["x"], "non_vulnerable_x_1");
        assert_eq!(clash.collisions, vec!["x".to_string()]);
    }

    #[test]
    fn reflectively_named_members_kept() {
        let src = "class A { Object f(String k) throws Exception { Class<?> c = Class.forName(\"p.B\"); return c.getMethod(\"show\" + k).invoke(null); } }\nclass B { static void showAll() {} static void hide() {} }";
        let out = one(src, RenameLabel::Vulnerable);
        for n in ["B", "showAll"] {
            assert!(out.kept.contains(&n.to_string()), "{n}");
        }
        assert!(out.map.identifiers.contains_key("hide") && out.map.identifiers.contains_key("A"));
        let plain = one("class A { String f() { return \"hide\"; } void hide() {} }", RenameLabel::Vulnerable);
        assert!(plain.map.identifiers.contains_key("hide"));
    }

    #[test]
    fn external_supertype_methods_kept() {
        let src = "class A extends Thread { void go() { start(); } public void work() {} }\nclass B extends A { public void work() {} }";
        let out = one(src, RenameLabel::Vulnerable);
        assert!(out.kept.contains(&"work".to_string()) && out.kept.contains(&"go".to_string()));
        assert!(out.files[0].1.contains("start();"));
    }

    #[test]
    fn renamed_repo_parses_to_same_shape() {
        let src = "package p;\nclass A {\n  int k;\n  int id(int x) { return x + k; }\n  int g(int v) {\n    outer: for (int i = 0; i < v; i++) { if (i > 2) continue outer; }\n    return id(v);\n  }\n}\n";
        let before = parse_sources(vec![("p/A.java".into(), src.into())]).unwrap();
        let out = one(src, RenameLabel::Vulnerable);
        let after = parse_sources(out.files.clone()).unwrap();
        assert!(after.diagnostics.is_empty(), "{:?}", after.diagnostics);
        let (g0, g1) = (assemble_original_udg(&before), assemble_original_udg(&after));
        assert_eq!(before.statements.len(), after.statements.len());
        assert_eq!(g0.edges.len(), g1.edges.len());
        for (a, b) in before.statements.iter().zip(&after.statements) {
            assert_eq!((a.kind, a.line_span), (b.kind, b.line_span));
        }
    }
}
