//! Def-use edges from reaching definitions.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use super::UdgEdge;
use crate::frontend::model::{FunctionDecl, RepoModel, StmtId};

/// Flow-sensitive, path-insensitive reaching definitions over `cfg`; one
/// edge `d -> s` carrying `v` per definition `d` of `v` reaching a use in `s`.
pub fn build_ddg(model: &RepoModel, f: &FunctionDecl, cfg: &[(StmtId, StmtId)]) -> Vec<UdgEdge> {
    let nodes: Vec<StmtId> = std::iter::once(f.entry).chain(f.body.iter().copied()).chain(std::iter::once(f.exit)).collect();
    let pos: HashMap<StmtId, usize> = nodes.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut defs: Vec<(usize, &str)> = Vec::new();
    for (i, s) in nodes.iter().enumerate() {
        for v in &model.stmt(*s).defs {
            defs.push((i, v.as_str()));
        }
    }
    let nd = defs.len();
    let mut by_var: HashMap<&str, Vec<usize>> = HashMap::new();
    for (k, (_, v)) in defs.iter().enumerate() {
        by_var.entry(v).or_default().push(k);
    }
    let mut gen = vec![FixedBitSet::with_capacity(nd); nodes.len()];
    let mut kill = vec![FixedBitSet::with_capacity(nd); nodes.len()];
    for (k, (i, v)) in defs.iter().enumerate() {
        gen[*i].insert(k);
        for &o in &by_var[v] {
            kill[*i].insert(o);
        }
    }
    let mut preds = vec![Vec::new(); nodes.len()];
    for (a, b) in cfg {
        if let (Some(&ia), Some(&ib)) = (pos.get(a), pos.get(b)) {
            preds[ib].push(ia);
        }
    }
    let mut inn = vec![FixedBitSet::with_capacity(nd); nodes.len()];
    let mut out = gen.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for n in 0..nodes.len() {
            let mut i = FixedBitSet::with_capacity(nd);
            for &p in &preds[n] {
                i.union_with(&out[p]);
            }
            let mut o = i.clone();
            o.difference_with(&kill[n]);
            o.union_with(&gen[n]);
            if o != out[n] {
                out[n] = o;
                changed = true;
            }
            inn[n] = i;
        }
    }
    let mut edges = Vec::new();
    for (n, s) in nodes.iter().enumerate() {
        for v in &model.stmt(*s).uses {
            let Some(ks) = by_var.get(v.as_str()) else { continue };
            for &k in ks {
                if inn[n].contains(k) {
                    edges.push(UdgEdge::dd(nodes[defs[k].0], *s, v));
                }
            }
        }
    }
    edges
}

/// Call-argument positions binding `var` in `stmt`, or `None` when some
/// read of `var` there is outside every call argument.
pub fn argument_bindings(model: &RepoModel, stmt: StmtId, var: &str) -> Option<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for u in model.stmt(stmt).use_sites.iter().filter(|u| u.var == var) {
        out.push(u.arg?);
    }
    if out.is_empty() {
        return None;
    }
    out.sort();
    out.dedup();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_sources;
    use crate::udg::build_cfg;

    fn ddg_of(body: &str) -> (RepoModel, Vec<(String, String, String)>) {
        let m = parse_sources(vec![("T.java".into(), format!("class T {{ int m(int p, boolean c) {{ {body} }} }}"))]).unwrap();
        let f = &m.functions[0];
        let cfg = build_cfg(f);
        let mut e: Vec<_> = build_ddg(&m, f, &cfg)
            .into_iter()
            .map(|e| {
                let t = |n: crate::udg::NodeRef| m.stmt(n.stmt().unwrap()).text.clone();
                (t(e.src), t(e.dst), e.variable.unwrap())
            })
            .collect();
        e.sort();
        (m, e)
    }

    #[test]
    fn single_def_use() {
        let (_, e) = ddg_of("int x = 1; int y = x; return y;");
        assert_eq!(e, vec![("int x = 1;".into(), "int y = x;".into(), "x".into()), ("int y = x;".into(), "return y;".into(), "y".into())]);
    }

    #[test]
    fn both_branch_defs_reach() {
        let (_, e) = ddg_of("int x = 1; if (c) x = 2; int y = x; return y;");
        let into_y: Vec<_> = e.iter().filter(|(_, d, _)| d == "int y = x;").map(|(s, _, _)| s.clone()).collect();
        assert_eq!(into_y, vec!["int x = 1;".to_string(), "x = 2;".to_string()]);
    }

    #[test]
    fn parameter_use_comes_from_entry() {
        let (_, e) = ddg_of("return p + 1;");
        assert_eq!(e.len(), 1);
        assert!(e[0].0.starts_with("int m(int p"));
        assert_eq!(e[0].2, "p");
    }

    #[test]
    fn redefinition_kills() {
        let (_, e) = ddg_of("int x = p; x = 3; return x;");
        assert!(!e.iter().any(|(s, d, _)| s == "int x = p;" && d == "return x;"));
    }

    #[test]
    fn argument_binding_requires_all_reads_in_arguments() {
        let m = parse_sources(vec![("T.java".into(), "class T { int f(int a) { return a; } void g(int x, int y) { int r = f(x) + y; int s = f(y) + y; } }".into())]).unwrap();
        let g = &m.functions[1];
        assert_eq!(argument_bindings(&m, g.body[0], "x"), Some(vec![(0, 0)]));
        assert_eq!(argument_bindings(&m, g.body[0], "y"), None);
        assert_eq!(argument_bindings(&m, g.body[1], "y"), None);
    }
}
