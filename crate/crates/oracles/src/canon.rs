//! Name-independent keys for comparing a repository with its renamed copy.
//!
//! Renaming keeps every statement on its line, so a statement is keyed by
//! (file, lines, kind, ordinal among equals). Identifiers are compared
//! token by token: equal, or renamed exactly as the map says.

use std::collections::{BTreeMap, BTreeSet};

use weft_core::context::HolisticContext;
use weft_core::frontend::{RepoModel, StmtId, StmtKind};
use weft_core::harness::RenameMap;
use weft_core::udg::{NodeRef, Tau, UnifiedDependencyGraph};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StmtKey {
    pub file: String,
    pub start: u32,
    pub end: u32,
    pub kind: StmtKind,
    pub ordinal: usize,
}

/// Keys for every statement; `map` translates file paths of the original.
pub fn statement_keys(model: &RepoModel, map: Option<&RenameMap>) -> BTreeMap<StmtId, StmtKey> {
    let mut seen: BTreeMap<(String, u32, u32, StmtKind), usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for s in &model.statements {
        let path = model.file(s.file).path.clone();
        let file = map.map_or(path.clone(), |m| m.file(&path));
        let k = seen.entry((file.clone(), s.line_span.start, s.line_span.end, s.kind)).or_default();
        out.insert(s.id, StmtKey { file, start: s.line_span.start, end: s.line_span.end, kind: s.kind, ordinal: *k });
        *k += 1;
    }
    out
}

fn tokens(s: &str) -> Vec<(bool, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut ident = None;
    for (i, c) in s.char_indices() {
        let is = c.is_alphanumeric() || c == '_' || c == '$';
        if ident != Some(is) {
            if i > start {
                out.push((ident.unwrap_or(false), &s[start..i]));
            }
            start = i;
            ident = Some(is);
        }
    }
    if start < s.len() {
        out.push((ident.unwrap_or(false), &s[start..]));
    }
    out
}

/// `b` spells `a` with some identifiers renamed per `map`.
pub fn renamed_as(a: &str, b: &str, map: &RenameMap) -> bool {
    let (ta, tb) = (tokens(a), tokens(b));
    ta.len() == tb.len()
        && ta.iter().zip(&tb).all(|((ia, x), (ib, y))| ia == ib && (x == y || (*ia && map.identifiers.get(*x).is_some_and(|r| r == y))))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum End {
    Stmt(StmtKey),
    External(String, bool),
}

fn end(g: &UnifiedDependencyGraph, keys: &BTreeMap<StmtId, StmtKey>, n: NodeRef) -> End {
    match n {
        NodeRef::Stmt(s) => End::Stmt(keys[&s].clone()),
        NodeRef::External(_) => {
            let x = g.external_node(n).expect("external node");
            End::External(x.signature.clone(), x.reflective)
        }
    }
}

type EdgeGroups = BTreeMap<(Tau, Option<usize>), Vec<(End, End, Option<String>)>>;

fn groups(g: &UnifiedDependencyGraph, keys: &BTreeMap<StmtId, StmtKey>) -> EdgeGroups {
    let mut out: EdgeGroups = BTreeMap::new();
    for e in &g.edges {
        out.entry((e.tau, e.call_index)).or_default().push((end(g, keys, e.src), end(g, keys, e.dst), e.variable.clone()));
    }
    out
}

fn end_matches(a: &End, b: &End, map: &RenameMap) -> bool {
    match (a, b) {
        (End::Stmt(x), End::Stmt(y)) => x == y,
        (End::External(x, rx), End::External(y, ry)) => rx == ry && renamed_as(x, y, map),
        _ => false,
    }
}

/// Describes the first difference between the two graphs, if any.
pub fn graph_correspondence(m0: &RepoModel, g0: &UnifiedDependencyGraph, m1: &RepoModel, g1: &UnifiedDependencyGraph, map: &RenameMap) -> Result<(), String> {
    let (k0, k1) = (statement_keys(m0, Some(map)), statement_keys(m1, None));
    let s0: BTreeSet<&StmtKey> = k0.values().collect();
    let s1: BTreeSet<&StmtKey> = k1.values().collect();
    if s0 != s1 {
        return Err(format!("statement sets differ: {:?}", s0.symmetric_difference(&s1).take(3).collect::<Vec<_>>()));
    }
    let (a, b) = (groups(g0, &k0), groups(g1, &k1));
    if a.keys().ne(b.keys()) {
        return Err("edge kinds differ".into());
    }
    for (k, ea) in &a {
        let eb = &b[k];
        if ea.len() != eb.len() {
            return Err(format!("{k:?}: {} edges vs {}", ea.len(), eb.len()));
        }
        let mut used = vec![false; eb.len()];
        for (s, d, v) in ea {
            let hit = eb.iter().enumerate().position(|(i, (s2, d2, v2))| {
                !used[i]
                    && end_matches(s, s2, map)
                    && end_matches(d, d2, map)
                    && match (v, v2) {
                        (Some(x), Some(y)) => renamed_as(x, y, map),
                        (None, None) => true,
                        _ => false,
                    }
            });
            match hit {
                Some(i) => used[i] = true,
                None => return Err(format!("{k:?}: no counterpart for {s:?} -> {d:?} ({v:?})")),
            }
        }
    }
    Ok(())
}

/// Compares two contexts slice by slice and line set by line set.
pub fn context_correspondence(m0: &RepoModel, c0: &HolisticContext, m1: &RepoModel, c1: &HolisticContext, map: &RenameMap) -> Result<(), String> {
    let (k0, k1) = (statement_keys(m0, Some(map)), statement_keys(m1, None));
    let keyed = |k: &BTreeMap<StmtId, StmtKey>, v: &[StmtId]| v.iter().map(|s| k[s].clone()).collect::<BTreeSet<_>>();
    let parts = [
        ("data", &c0.data.statements, &c1.data.statements),
        ("control", &c0.control.statements, &c1.control.statements),
        ("usage", &c0.usage.statements, &c1.usage.statements),
        ("definition", &c0.definition.statements, &c1.definition.statements),
        ("declaration", &c0.declaration.statements, &c1.declaration.statements),
        ("all", &c0.all, &c1.all),
    ];
    for (name, a, b) in parts {
        if keyed(&k0, a) != keyed(&k1, b) {
            return Err(format!("{name} slice differs"));
        }
    }
    let lines0: BTreeMap<String, &Vec<(u32, u32)>> = c0.lines.iter().map(|(f, l)| (map.file(f), l)).collect();
    let lines1: BTreeMap<String, &Vec<(u32, u32)>> = c1.lines.iter().map(|(f, l)| (f.clone(), l)).collect();
    if lines0 != lines1 {
        return Err("line sets differ".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_renaming() {
        let map = RenameMap { identifiers: BTreeMap::from([("x".to_string(), "vulnerable_x".to_string())]), files: BTreeMap::new() };
        assert!(renamed_as("this.x", "this.vulnerable_x", &map));
        assert!(renamed_as("a.b", "a.b", &map));
        assert!(!renamed_as("x", "x2", &map));
        assert!(!renamed_as("y", "vulnerable_x", &map));
    }
}
