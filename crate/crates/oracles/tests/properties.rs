//! Graph, summary and slice invariants over generated inputs.

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use weft_core::context::{control_closure, data_closure, Direction};
use weft_core::enhance::oracle::TypePropagationOracle;
use weft_core::enhance::order::scc_order;
use weft_core::enhance::{compute_analysis_order, enhance, function_call_graph, EnhanceConfig};
use weft_core::frontend::{parse_sources, RepoModel, StmtId};
use weft_core::udg::{assemble_original_udg, NodeRef, Tau, UdgEdge, UnifiedDependencyGraph};
use weft_oracles::*;

fn program(seed: u64, recursive: bool) -> RepoModel {
    let shape = ProgramShape { max_functions: 8, force_recursion: recursive, ..ProgramShape::default() };
    parse_sources(vec![("G.java".into(), generate_program(seed, &shape))]).unwrap()
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Some control-flow path from `d` reaches `s` without passing another
/// definition of `v`.
fn def_clear_path(m: &RepoModel, g: &UnifiedDependencyGraph, d: StmtId, s: StmtId, v: &str) -> bool {
    let succ = |n: StmtId| g.edges.iter().filter(move |e| e.tau == Tau::ControlFlow && e.src == NodeRef::Stmt(n)).filter_map(|e| e.dst.stmt());
    let mut seen = BTreeSet::new();
    let mut q: VecDeque<StmtId> = succ(d).collect();
    while let Some(n) = q.pop_front() {
        if n == s {
            return true;
        }
        if !seen.insert(n) || m.stmt(n).defs.contains(v) {
            continue;
        }
        q.extend(succ(n));
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn statements_reread_from_their_span(seed in any::<u64>(), rec in any::<bool>()) {
        let m = program(seed, rec);
        for s in m.statements.iter().filter(|s| !s.is_synthetic()) {
            let f = m.file(s.file);
            let lines: Vec<&str> = f.text.lines().collect();
            let span = lines[s.line_span.start as usize - 1..s.line_span.end as usize].join("\n");
            prop_assert_eq!(&f.text[s.byte_span.0..s.byte_span.1], s.text.as_str());
            prop_assert!(collapse(&span).contains(&collapse(&s.text)), "{:?} not in {:?}", s.text, span);
            for v in s.defs.iter().chain(&s.uses) {
                let head = v.split('.').next().unwrap();
                prop_assert!(s.text.contains(head), "{} not in {:?}", v, s.text);
            }
        }
    }

    #[test]
    fn data_edges_follow_def_clear_paths(seed in any::<u64>(), rec in any::<bool>()) {
        let m = program(seed, rec);
        let g = assemble_original_udg(&m);
        for e in g.edges.iter().filter(|e| e.tau == Tau::DataDependency) {
            let (d, s) = (e.src.stmt().unwrap(), e.dst.stmt().unwrap());
            let v = e.variable.as_deref().unwrap();
            prop_assert!(m.stmt(d).defs.contains(v), "{} not defined at {:?}", v, d);
            prop_assert!(m.stmt(s).uses.contains(v), "{} not used at {:?}", v, s);
            prop_assert!(def_clear_path(&m, &g, d, s, v), "no def-clear path for {} from {:?} to {:?}", v, d, s);
        }
    }

    #[test]
    fn call_edges_land_on_entries_or_externals(seed in any::<u64>(), rec in any::<bool>()) {
        let m = program(seed, rec);
        let g = assemble_original_udg(&m);
        let entries: BTreeSet<StmtId> = m.functions.iter().map(|f| f.entry).collect();
        for e in g.edges.iter().filter(|e| e.tau == Tau::Call) {
            match e.dst {
                NodeRef::Stmt(s) => prop_assert!(entries.contains(&s)),
                NodeRef::External(_) => prop_assert!(g.external_node(e.dst).is_some()),
            }
        }
    }

    #[test]
    fn graphs_are_deterministic(seed in any::<u64>(), rec in any::<bool>()) {
        let m = program(seed, rec);
        let g0 = assemble_original_udg(&m);
        prop_assert_eq!(&g0, &assemble_original_udg(&program(seed, rec)));
        let a = enhance(&m, &g0, &mut TypePropagationOracle, &EnhanceConfig::default());
        let b = enhance(&m, &g0, &mut TypePropagationOracle, &EnhanceConfig::default());
        prop_assert_eq!(a.graph, b.graph);
        prop_assert_eq!(a.summaries, b.summaries);
    }

    #[test]
    fn summaries_match_the_oracle(seed in any::<u64>(), rec in any::<bool>()) {
        let m = program(seed, rec);
        let g0 = assemble_original_udg(&m);
        let e = enhance(&m, &g0, &mut TypePropagationOracle, &EnhanceConfig { pruning: false, ..EnhanceConfig::default() });
        let bf = brute_force_summary_oracle(&m, &e.graph, 1 << 26).unwrap();
        for f in &m.functions {
            prop_assert_eq!(&e.summaries[&f.id].phi, &bf[&f.id], "{}", f.name);
        }
    }

    #[test]
    fn deeper_unrolling_never_retracts(seed in any::<u64>()) {
        let m = program(seed, true);
        let g = assemble_original_udg(&m);
        let mut prev = depth_bounded_summary_oracle(&m, &g, 0, 1 << 26).unwrap();
        for d in 1..6 {
            let next = depth_bounded_summary_oracle(&m, &g, d, 1 << 26).unwrap();
            for (f, phi) in &prev {
                for (p, b) in phi {
                    prop_assert!(!*b || next[f][p], "depth {}: {:?}.{} flipped to false", d, f, p);
                }
            }
            prev = next;
        }
    }

    #[test]
    fn order_is_sound(seed in any::<u64>()) {
        let (n, edges) = random_call_graph(seed, 30);
        prop_assert!(check_order(n, &edges, &scc_order(n, &edges)).is_ok());
        let m = program(seed, true);
        let g = assemble_original_udg(&m);
        prop_assert!(check_order(m.functions.len(), &function_call_graph(&m, &g), &compute_analysis_order(&m, &g)).is_ok());
    }

    #[test]
    fn slices_equal_closures(seed in any::<u64>(), pick in any::<prop::sample::Index>(), limit in 0usize..5) {
        let g = random_udg(seed, &GraphShape { max_nodes: 60, ..GraphShape::default() });
        let adj = g.adjacency();
        let stmts: Vec<StmtId> = g.nodes.iter().filter_map(|n| n.stmt()).collect();
        let s = *pick.get(&stmts);
        for dir in [Direction::Forward, Direction::Backward, Direction::Both] {
            prop_assert_eq!(data_closure(&g, &adj, &[s], dir), data_closure_oracle(&g, &[s], dir));
        }
        prop_assert_eq!(control_closure(&g, &adj, s, limit), control_closure_oracle(&g, s, limit));
    }

    #[test]
    fn extra_edges_never_shrink_slices(seed in any::<u64>(), pick in any::<prop::sample::Index>(), extra in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), 0u8..3), 1..8)) {
        let g = random_udg(seed, &GraphShape { max_nodes: 60, ..GraphShape::default() });
        let stmts: Vec<StmtId> = g.nodes.iter().filter_map(|n| n.stmt()).collect();
        let s = *pick.get(&stmts);
        let mut h = g.clone();
        for (a, b, k) in &extra {
            let (a, b) = (*a.get(&stmts), *b.get(&stmts));
            h.add_edge(match k {
                0 => UdgEdge::cf(a, b),
                1 => UdgEdge::dd(a, b, "a"),
                _ => UdgEdge::call(a, NodeRef::Stmt(b), 0),
            });
        }
        let (ga, ha) = (g.adjacency(), h.adjacency());
        for dir in [Direction::Forward, Direction::Backward, Direction::Both] {
            prop_assert!(data_closure(&g, &ga, &[s], dir).is_subset(&data_closure(&h, &ha, &[s], dir)));
        }
        for limit in 0..4 {
            let (small, big) = (control_closure(&g, &ga, s, limit), control_closure(&h, &ha, s, limit));
            prop_assert!(small.statements.is_subset(&big.statements));
        }
    }
}
