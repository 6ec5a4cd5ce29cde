use std::collections::BTreeSet;

use super::model::{ClassId, FuncId, RepoModel, TypeHierarchy};
use super::FrontendError;

fn simple_type(t: &str) -> String {
    let base = t.trim_end_matches("[]");
    let dims = (t.len() - base.len()) / 2;
    let simple = base.rsplit('.').next().unwrap_or(base);
    format!("{simple}{}", "[]".repeat(dims))
}

/// True when `a` and `b` have the same name, arity and parameter type names.
pub fn same_signature(model: &RepoModel, a: FuncId, b: FuncId) -> bool {
    let (fa, fb) = (model.func(a), model.func(b));
    fa.name == fb.name
        && fa.params.len() == fb.params.len()
        && fa.signature.param_types.iter().zip(&fb.signature.param_types).all(|(x, y)| simple_type(x) == simple_type(y))
}

pub fn build_type_hierarchy(model: &RepoModel) -> Result<TypeHierarchy, FrontendError> {
    let mut h = TypeHierarchy::default();
    for c in &model.classes {
        for w in &c.supertypes_written {
            match model.resolve_type(w, c.file) {
                Some(t) if t != c.id => h.edges.push((c.id, t)),
                Some(_) => return Err(FrontendError::HierarchyCycle(vec![c.name.clone()])),
                None => h.external.push((c.id, w.clone())),
            }
        }
    }
    h.edges.sort();
    h.edges.dedup();
    if let Some(cycle) = find_cycle(model, &h) {
        return Err(FrontendError::HierarchyCycle(cycle));
    }
    for c in &model.classes {
        let supers = h.all_supertypes(c.id);
        for &m in &c.methods {
            let fm = model.func(m);
            if fm.is_ctor || fm.is_initializer || fm.is_static {
                continue;
            }
            for s in &supers {
                for &n in &model.class(*s).methods {
                    let fnn = model.func(n);
                    if fnn.is_ctor || fnn.is_initializer || fnn.is_static {
                        continue;
                    }
                    if same_signature(model, m, n) {
                        h.method_overrides.push((m, n));
                    }
                }
            }
        }
    }
    h.method_overrides.sort();
    h.method_overrides.dedup();
    Ok(h)
}

fn find_cycle(model: &RepoModel, h: &TypeHierarchy) -> Option<Vec<String>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; model.classes.len()];
    fn dfs(c: ClassId, h: &TypeHierarchy, state: &mut [u8], path: &mut Vec<ClassId>) -> Option<Vec<ClassId>> {
        state[c.idx()] = 1;
        path.push(c);
        for s in h.supers(c) {
            match state[s.idx()] {
                1 => {
                    let at = path.iter().position(|x| *x == s).unwrap_or(0);
                    return Some(path[at..].to_vec());
                }
                0 => {
                    if let Some(cyc) = dfs(s, h, state, path) {
                        return Some(cyc);
                    }
                }
                _ => {}
            }
        }
        path.pop();
        state[c.idx()] = 2;
        None
    }
    for c in &model.classes {
        if state[c.id.idx()] == 0 {
            let mut path = Vec::new();
            if let Some(cyc) = dfs(c.id, h, &mut state, &mut path) {
                return Some(cyc.into_iter().map(|c| model.class(c).name.clone()).collect());
            }
        }
    }
    None
}

/// Classes reachable downward from `c`, including `c`.
pub fn self_and_subtypes(h: &TypeHierarchy, c: ClassId) -> BTreeSet<ClassId> {
    let mut s = h.all_subtypes(c);
    s.insert(c);
    s
}

#[cfg(test)]
mod tests {
    use crate::frontend::parse_sources;

    #[test]
    fn override_pairs_match_brute_force() {
        let m = parse_sources(vec![(
            "A.java".into(),
            "class A { int id(int x) { return x; } void other(String s) {} }
             class B extends A { int id(int y) { return y + 1; } void other(int s) {} }
             class C extends B { int id(int z) { return z; } }"
                .into(),
        )])
        .unwrap();
        let mut expected = Vec::new();
        for a in &m.functions {
            for b in &m.functions {
                let sub = m.hierarchy.all_supertypes(a.class).contains(&b.class);
                if sub && a.name == b.name && a.signature.param_types == b.signature.param_types {
                    expected.push((a.id, b.id));
                }
            }
        }
        expected.sort();
        assert_eq!(m.hierarchy.method_overrides, expected);
        assert_eq!(expected.len(), 3);
    }

    #[test]
    fn external_supertype_is_flagged() {
        let m = parse_sources(vec![("A.java".into(), "class A extends java.util.ArrayList implements Runnable { public void run() {} }".into())]).unwrap();
        assert!(m.hierarchy.edges.is_empty());
        assert_eq!(m.hierarchy.external.len(), 2);
    }

    #[test]
    fn cycle_is_rejected() {
        let r = parse_sources(vec![("A.java".into(), "class A extends B {} class B extends A {}".into())]);
        assert!(matches!(r, Err(crate::frontend::FrontendError::HierarchyCycle(_))));
    }
}
