//! The twelve acceptance criteria, one PASS/FAIL line each.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use weft_core::context::{control_closure, data_closure, ContextConfig, Direction, Extractor, HolisticContext};
use weft_core::enhance::oracle::{answer_class, answer_method, Fault, ScriptedOracle, TypePropagationOracle};
use weft_core::enhance::{compute_analysis_order, enhance, function_call_graph, order::scc_order, AuditOp, EnhanceConfig, Pass, QueryKind, ResolutionOracle};
use weft_core::frontend::{parse_repository, parse_sources, CallKind, FrontendConfig, FuncId, RepoModel, StmtId, StmtKind};
use weft_core::harness::{adaptive_rename, compute_pairwise, run_scan, scan_model, OracleMode, RenameLabel, ScanConfig};
use weft_core::knowledge::KnowledgeBase;
use weft_core::reasoning::client::{KeywordClient, ScriptedClient};
use weft_core::reasoning::Outcome;
use weft_core::udg::{argument_bindings, assemble_original_udg, NodeRef, Tau, UnifiedDependencyGraph};
use weft_oracles::*;

type Outcome_ = Result<String, String>;
type Ranges = Vec<(u32, u32)>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

const FIXTURES: [&str; 4] = ["el_template", "reflect_display", "pruning", "polymorphism"];

fn load(name: &str) -> RepoModel {
    parse_repository(&fixture(name), &FrontendConfig::default()).expect("fixture parses")
}

fn sources(root: &Path) -> Vec<(String, String)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.extension().is_some_and(|x| x == "java") {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, std::fs::read_to_string(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

fn func<'a>(m: &'a RepoModel, name: &str) -> &'a weft_core::frontend::FunctionDecl {
    m.functions.iter().find(|f| f.name == name).unwrap_or_else(|| panic!("no function {name}"))
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    check(t.elapsed() < limit, || format!("took {:?}, limit {limit:?}", t.elapsed()))
}

/// Oracle that resolves the reflective call in `display` to `displaySearch`.
fn property_class_oracle(m: &RepoModel) -> ScriptedOracle {
    let sig = func(m, "displaySearch").signature.render();
    ScriptedOracle::new().on(QueryKind::ReflectionClass, "*", answer_class("org.example.macro.PropertyClass")).on(QueryKind::ReflectionMethod, "*", answer_method(&sig))
}

fn correct_oracle(name: &str, m: &RepoModel) -> Box<dyn ResolutionOracle> {
    match name {
        "reflect_display" => Box::new(property_class_oracle(m)),
        _ => Box::new(TypePropagationOracle),
    }
}

fn c1_template_context() -> Outcome_ {
    let t = Instant::now();
    let m = load("el_template");
    let g0 = assemble_original_udg(&m);
    let e = enhance(&m, &g0, &mut TypePropagationOracle, &EnhanceConfig::default());
    let kb = KnowledgeBase::starter();
    let invs = weft_core::context::find_sensitive_invocations(&m, &e.graph, &kb, &[]);
    let inv = invs.iter().find(|i| m.stmt(i.statement).line_span.start == 11).ok_or("no sink at line 11")?;
    let x = Extractor::new(&m, &e.graph, ContextConfig::default());
    let c = x.holistic_context(inv);
    let lines = |v: &[StmtId]| -> Vec<(u32, u32)> { x.lines_of(v).into_values().flatten().collect() };
    let expect: [(&str, Ranges, Ranges); 5] = [
        ("explicit", lines(&c.explicit), vec![(8, 11)]),
        ("usage", lines(&c.usage.statements), vec![(26, 31)]),
        ("definition", lines(&c.definition.statements), vec![(4, 4), (18, 24)]),
        ("declaration", lines(&c.declaration.statements), vec![(1, 1), (17, 17), (33, 33)]),
        ("holistic", c.lines.values().flatten().copied().collect(), vec![(1, 4), (8, 33)]),
    ];
    for (name, got, want) in &expect {
        check(got == want, || format!("{name}: got {got:?}, want {want:?}"))?;
    }
    within(t, Duration::from_secs(5))?;
    Ok(format!("all five line sets exact in {:?}", t.elapsed()))
}

fn c2_reflective_edge() -> Outcome_ {
    let t = Instant::now();
    let m = load("reflect_display");
    let g0 = assemble_original_udg(&m);
    let e = enhance(&m, &g0, &mut property_class_oracle(&m), &EnhanceConfig::default());
    let (display, target) = (func(&m, "display"), func(&m, "displaySearch"));
    let edge = |g: &UnifiedDependencyGraph| display.body.iter().any(|s| g.contains_edge(NodeRef::Stmt(*s), NodeRef::Stmt(target.entry), Tau::Call));
    let invoke = display.body.iter().copied().find(|s| m.stmt(*s).calls.iter().any(|c| c.name == "invoke")).ok_or("no invoke")?;
    check(m.stmt(invoke).line_span.start == 15, || "invoke not on line 15".into())?;
    check(edge(&e.graph), || "no display→displaySearch call edge in the enhanced graph".into())?;
    check(!edge(&g0), || "call edge already present before enhancement".into())?;
    check(e.graph.contains_edge(NodeRef::Stmt(invoke), NodeRef::Stmt(target.entry), Tau::Call), || "edge not from the invoke statement".into())?;
    within(t, Duration::from_secs(5))?;
    Ok(format!("line 15 → displaySearch added, absent from the original graph, {:?}", t.elapsed()))
}

fn c3_template_verdict() -> Outcome_ {
    let m = load("el_template");
    let kb = KnowledgeBase::starter();
    let cfg = ScanConfig { n_rounds: 3, ..ScanConfig::default() };
    let a = scan_model(m, "el_template", &kb, &[], &cfg, &mut TypePropagationOracle, &ScriptedClient::verdicts(&[false, false, false]));
    let f = a.report.findings.iter().find(|f| f.cwe == "CWE-74" && f.line == 11).ok_or("no CWE-74 finding at line 11")?;
    check(f.verdict == Outcome::NotVulnerable, || format!("verdict {:?}", f.verdict))?;
    check(f.confidence == 1.0, || format!("confidence {}", f.confidence))?;
    check(f.votes == vec![Some(false); 3], || format!("votes {:?}", f.votes))?;
    let u = a.units.iter().find(|u| u.unit.cwe == "CWE-74").ok_or("no CWE-74 unit")?;
    check(u.prompt.text.contains(&u.unit.guideline.vuln_patterns), || "guideline patterns missing from prompt".into())?;
    Ok("non-vulnerable, confidence 1.0 from (F, F, F)".into())
}

fn c4_pairwise_identity() -> Outcome_ {
    // (P-C, P-R, VP-S) rows of both pairwise column groups.
    let rows: [(f64, f64, f64); 24] = [
        (0.25, 0.20, 0.05), (0.16, 0.12, 0.04), (0.24, 0.07, 0.17), (0.04, 0.01, 0.03), (0.30, 0.25, 0.05), (0.25, 0.03, 0.22),
        (0.08, 0.02, 0.06), (0.58, 0.00, 0.58), (0.44, 0.02, 0.42), (0.35, 0.01, 0.34), (0.38, 0.01, 0.37), (0.28, 0.02, 0.26),
        (0.53, 0.02, 0.51), (0.20, 0.15, 0.05), (0.09, 0.02, 0.07), (0.07, 0.02, 0.05), (0.23, 0.04, 0.19), (0.13, 0.03, 0.10),
        (0.59, 0.01, 0.58), (0.30, 0.03, 0.27), (0.36, 0.01, 0.35), (0.26, 0.02, 0.24), (0.30, 0.02, 0.28), (0.55, 0.02, 0.53),
    ];
    for (pc, pr, vps) in rows {
        let (c, r) = ((pc * 100.0_f64).round() as usize, (pr * 100.0_f64).round() as usize);
        let mut pairs = vec![(true, false); c];
        pairs.extend(vec![(false, true); r]);
        for i in 0..100 - c - r {
            pairs.push(if i % 2 == 0 { (true, true) } else { (false, false) });
        }
        let p = compute_pairwise(&pairs).map_err(|e| e.to_string())?;
        check((p.p_c - pc).abs() < 1e-9 && (p.p_r - pr).abs() < 1e-9, || format!("rates {p:?} for {pc}/{pr}"))?;
        check((p.vp_s - (p.p_c - p.p_r)).abs() < 1e-9, || format!("identity broken: {p:?}"))?;
        check((p.vp_s - vps).abs() < 1e-9, || format!("VP-S {} vs table {vps}", p.vp_s))?;
    }
    Ok(format!("{} rows reproduced", rows.len()))
}

/// (body, jump text, expected successor text or `None` for the exit).
const JUMPS: [(&str, &str, Option<&str>); 20] = [
    ("int s = 0; for (int i = 0; i < n; i++) { if (i == 2) continue; s = s + i; } return s;", "continue;", Some("i++")),
    ("int s = 0; outer: for (int i = 0; i < n; i++) { for (int j = 0; j < n; j++) { if (j > i) continue outer; s = s + j; } } return s;", "continue outer;", Some("i++")),
    ("int s = 0; for (int v : xs) { if (v < 0) continue; s = s + v; } return s;", "continue;", Some("for (int v : xs)")),
    ("int s = 0; rows: for (int v : xs) { int k = v; while (k > 0) { if (k == 3) continue rows; k = k - 1; } s = s + v; } return s;", "continue rows;", Some("for (int v : xs)")),
    ("int s = 0; while (s < n) { s = s + 1; if (s == 3) continue; s = s * 2; } return s;", "continue;", Some("while (s < n)")),
    ("int s = 0; loop: while (s < n) { s = s + 1; for (int j = 0; j < s; j++) { if (j == 1) continue loop; } s = s * 2; } return s;", "continue loop;", Some("while (s < n)")),
    ("int s = 0; do { s = s + 1; if (s == 3) continue; s = s * 2; } while (s < n); return s;", "continue;", Some("while (s < n);")),
    ("int s = 0; again: do { s = s + 1; int k = s; while (k > 0) { k = k - 1; if (k == 2) continue again; } } while (s < n); return s;", "continue again;", Some("while (s < n);")),
    ("int s = 0; for (int i = 0; i < n; i++) { if (i == 4) break; s = s + i; } s = s - 1; return s;", "break;", Some("s = s - 1;")),
    ("int s = 0; outer: for (int i = 0; i < n; i++) { for (int j = 0; j < n; j++) { if (i * j > 6) break outer; s = s + 1; } } s = s - 1; return s;", "break outer;", Some("s = s - 1;")),
    ("int s = 0; while (s < n) { s = s + 1; if (s == 5) break; } s = s + 100; return s;", "break;", Some("s = s + 100;")),
    ("int s = 0; top: while (s < n) { do { s = s + 1; if (s == 5) break top; } while (s < 3); } s = s + 100; return s;", "break top;", Some("s = s + 100;")),
    ("int s = 0; do { s = s + 1; if (s == 5) break; } while (s < n); s = s + 7; return s;", "break;", Some("s = s + 7;")),
    ("int s = 0; for (int v : xs) { if (v == 0) break; s = s + v; } s = -s; return s;", "break;", Some("s = -s;")),
    ("int s = 0; switch (n) { case 1: s = 10; break; default: s = 20; } s = s + 1; return s;", "break;", Some("s = s + 1;")),
    ("int s = 0; scan: for (int i = 0; i < n; i++) { switch (i) { case 3: break scan; default: s = s + i; } } s = s * 3; return s;", "break scan;", Some("s = s * 3;")),
    ("int s = 0; blk: { if (n > 3) break blk; s = 1; } s = s + 2; return s;", "break blk;", Some("s = s + 2;")),
    ("int s = 0; a: { b: { if (n > 3) break a; s = 1; } s = s + 5; } s = s + 9; return s;", "break a;", Some("s = s + 9;")),
    ("int s = n; done: { if (s > 3) { s = 4; break done; } s = 5; }", "break done;", None),
    ("int s = 0; for (int i = 0; i < n; ) { i = i + 1; switch (i) { case 2: continue; default: s = s + i; } } return s;", "continue;", Some("i < n")),
];

fn c5_labeled_jumps() -> Outcome_ {
    let mut ok = 0;
    let mut failures = Vec::new();
    for (i, (body, jump, want)) in JUMPS.iter().enumerate() {
        let ret = if body.contains("return") { "int" } else { "void" };
        let src = format!("class J {{\n{ret} f(int n, int[] xs) {{\n{body}\n}}\n}}\n");
        let m = parse_sources(vec![("J.java".into(), src)]).map_err(|e| e.to_string())?;
        let g0 = assemble_original_udg(&m);
        let e = enhance(&m, &g0, &mut TypePropagationOracle, &EnhanceConfig::default());
        let f = &m.functions[0];
        let stmts: Vec<StmtId> = f.body.iter().copied().filter(|s| m.stmt(*s).text.trim() == *jump).collect();
        if stmts.len() != 1 {
            failures.push(format!("case {}: {} statements `{jump}`", i + 1, stmts.len()));
            continue;
        }
        let succ: Vec<StmtId> = e.graph.edges.iter().filter(|x| x.tau == Tau::ControlFlow && x.src == NodeRef::Stmt(stmts[0])).filter_map(|x| x.dst.stmt()).collect();
        let hit = match want {
            None => succ == vec![f.exit],
            Some(t) => succ.len() == 1 && m.stmt(succ[0]).text.trim() == *t && m.stmt(succ[0]).kind != StmtKind::Exit,
        };
        if hit {
            ok += 1;
        } else {
            let got: Vec<String> = succ.iter().map(|s| format!("{:?} `{}`", m.stmt(*s).kind, m.stmt(*s).text)).collect();
            failures.push(format!("case {}: want {want:?}, got {got:?}", i + 1));
        }
    }
    check(ok == JUMPS.len(), || failures.join("; "))?;
    Ok(format!("{ok}/{} successors exact", JUMPS.len()))
}

fn c6_summary_equivalence() -> Outcome_ {
    let t = Instant::now();
    let (mut programs, mut recursive, mut functions, mut bits) = (0, 0, 0, 0);
    for seed in 0..60u64 {
        let shape = ProgramShape { force_recursion: seed % 3 == 0, ..ProgramShape::default() };
        let src = generate_program(seed, &shape);
        let m = parse_sources(vec![("G.java".into(), src)]).map_err(|e| e.to_string())?;
        check(m.functions.len() <= 20, || format!("seed {seed}: too many functions"))?;
        let g0 = assemble_original_udg(&m);
        let no_prune = EnhanceConfig { pruning: false, ..EnhanceConfig::default() };
        let e = enhance(&m, &g0, &mut TypePropagationOracle, &no_prune);
        let fcg = function_call_graph(&m, &e.graph);
        if !recursive_functions(m.functions.len(), &fcg).is_empty() {
            recursive += 1;
        }
        let bf = brute_force_summary_oracle(&m, &e.graph, 50_000_000).map_err(|x| format!("seed {seed}: {x}"))?;
        for f in &m.functions {
            let got = &e.summaries[&f.id].phi;
            check(got == &bf[&f.id], || format!("seed {seed} {}: pipeline {got:?}, oracle {:?}", f.name, bf[&f.id]))?;
            bits += got.len();
        }
        functions += m.functions.len();
        programs += 1;
    }
    check(programs >= 50 && recursive >= 5, || format!("{programs} programs, {recursive} recursive"))?;
    within(t, Duration::from_secs(60))?;
    Ok(format!("{programs} programs ({recursive} recursive), {functions} functions, {bits} bits agree in {:?}", t.elapsed()))
}

fn c7_slice_equivalence() -> Outcome_ {
    let mut checks = 0;
    for seed in 0..120u64 {
        let g = random_udg(seed, &GraphShape::default());
        let adj = g.adjacency();
        let stmts: Vec<StmtId> = g.nodes.iter().filter_map(|n| n.stmt()).collect();
        check(stmts.len() <= 200, || "graph too large".into())?;
        for k in 0..4 {
            let s = stmts[(seed as usize * 31 + k * 17) % stmts.len()];
            for dir in [Direction::Forward, Direction::Backward, Direction::Both] {
                let seeds = [s, stmts[(k * 7) % stmts.len()]];
                let (a, b) = (data_closure(&g, &adj, &seeds, dir), data_closure_oracle(&g, &seeds, dir));
                check(a == b, || format!("graph {seed}: data {dir:?} from {seeds:?} differs"))?;
                checks += 1;
            }
            for limit in 0..4 {
                let (a, b) = (control_closure(&g, &adj, s, limit), control_closure_oracle(&g, s, limit));
                check(a == b, || format!("graph {seed}: control from {s:?} limit {limit} differs: {a:?} vs {b:?}"))?;
                checks += 1;
            }
        }
    }
    Ok(format!("120 graphs, {checks} closures agree"))
}

fn c8_scc_order() -> Outcome_ {
    let mut nontrivial = 0;
    for seed in 0..120u64 {
        let (n, edges) = random_call_graph(seed, 40);
        let seq = scc_order(n, &edges);
        check_order(n, &edges, &seq).map_err(|v| format!("call graph {seed}: {v:?}"))?;
        if seq.components.iter().any(|c| c.members.len() > 1) {
            nontrivial += 1;
        }
    }
    for seed in 0..20u64 {
        let m = parse_sources(vec![("G.java".into(), generate_program(seed, &ProgramShape { force_recursion: true, ..ProgramShape::default() }))]).map_err(|e| e.to_string())?;
        let g = assemble_original_udg(&m);
        check_order(m.functions.len(), &function_call_graph(&m, &g), &compute_analysis_order(&m, &g)).map_err(|v| format!("program {seed}: {v:?}"))?;
    }
    check(nontrivial > 10, || format!("only {nontrivial} graphs with cycles"))?;
    Ok(format!("120 random call graphs ({nontrivial} with multi-member components) and 20 programs sound"))
}

/// Replays pruning from brute-force summaries: (removed, kept-and-bound).
fn replay_pruning(m: &RepoModel) -> Result<(usize, usize), String> {
    let g0 = assemble_original_udg(m);
    let pre = enhance(m, &g0, &mut TypePropagationOracle, &EnhanceConfig { pruning: false, ..EnhanceConfig::default() });
    let post = enhance(m, &g0, &mut TypePropagationOracle, &EnhanceConfig::default());
    let bf = brute_force_summary_oracle(m, &pre.graph, 50_000_000).map_err(|e| e.to_string())?;
    let phi = |f: FuncId, i: usize| bf[&f][&m.func(f).params[i]];
    let removed: BTreeSet<(NodeRef, NodeRef, Option<String>)> =
        post.audit.entries.iter().filter(|e| e.op == AuditOp::Remove && e.pass == Pass::Pruning).map(|e| (e.src, e.dst, e.variable.clone())).collect();
    let (mut n_removed, mut n_kept) = (0, 0);
    for e in pre.graph.edges.iter().filter(|e| e.tau == Tau::DataDependency) {
        let (Some(dst), Some(v)) = (e.dst.stmt(), e.variable.as_deref()) else { continue };
        if m.owner_func(dst).is_none() {
            continue;
        }
        let Some(bindings) = argument_bindings(m, dst, v) else { continue };
        // Per binding: None when the callee set is not fully in-repo and arity-matched.
        let verdicts: Vec<Option<bool>> = bindings
            .iter()
            .map(|&(c, i)| {
                let site = &m.stmt(dst).calls[c];
                let targets: Vec<NodeRef> = pre.graph.call_targets(dst, c).collect();
                if site.kind != CallKind::Method || targets.is_empty() {
                    return None;
                }
                let mut any = false;
                for t in targets {
                    let f = t.stmt().and_then(|s| m.func_of_entry(s))?;
                    if m.func(f).params.len() != site.args.len() {
                        return None;
                    }
                    any |= phi(f, i);
                }
                Some(any)
            })
            .collect();
        let expect_removed = verdicts.iter().all(|v| *v == Some(false));
        let was_removed = removed.contains(&(e.src, e.dst, e.variable.clone()));
        check(expect_removed == was_removed, || format!("edge {:?} -> {:?} ({v}): removed={was_removed}, oracle says {expect_removed}", e.src, e.dst))?;
        if was_removed {
            n_removed += 1;
        } else if verdicts.iter().all(Option::is_some) {
            check(verdicts.contains(&Some(true)), || format!("kept edge {:?} -> {:?} with all Φ false", e.src, e.dst))?;
            n_kept += 1;
        }
    }
    check(n_removed == removed.len(), || format!("audit lists {} removals, replay found {n_removed}", removed.len()))?;
    Ok((n_removed, n_kept))
}

fn c9_pruning_audit() -> Outcome_ {
    let (r, k) = replay_pruning(&load("pruning"))?;
    check(r > 0, || "no removals on the pruning fixture".into())?;
    let (mut gr, mut gk) = (0, 0);
    for seed in 0..20u64 {
        let m = parse_sources(vec![("G.java".into(), generate_program(seed, &ProgramShape::default()))]).map_err(|e| e.to_string())?;
        let (a, b) = replay_pruning(&m).map_err(|e| format!("program {seed}: {e}"))?;
        gr += a;
        gk += b;
    }
    Ok(format!("fixture: {r} removed (Φ=false), {k} kept (Φ=true); generated: {gr} removed, {gk} kept"))
}

fn contexts(m: &RepoModel, g: &UnifiedDependencyGraph) -> BTreeMap<StmtKey, HolisticContext> {
    let keys = statement_keys(m, None);
    let invs = weft_core::context::find_sensitive_invocations(m, g, &KnowledgeBase::starter(), &[]);
    let x = Extractor::new(m, g, ContextConfig::default());
    invs.iter().map(|i| (keys[&i.statement].clone(), x.holistic_context(i))).collect()
}

fn c10_rename_isomorphism() -> Outcome_ {
    let mut compared = 0;
    for name in FIXTURES {
        let files = sources(&fixture(name));
        let m0 = parse_sources(files.clone()).map_err(|e| e.to_string())?;
        for label in [RenameLabel::Vulnerable, RenameLabel::NonVulnerable] {
            let out = adaptive_rename(&files, label).map_err(|e| e.to_string())?;
            let m1 = parse_sources(out.files.clone()).map_err(|e| e.to_string())?;
            check(m1.diagnostics.len() == m0.diagnostics.len(), || format!("{name}: renamed copy has new diagnostics {:?}", m1.diagnostics))?;
            let (g0, g1) = (assemble_original_udg(&m0), assemble_original_udg(&m1));
            graph_correspondence(&m0, &g0, &m1, &g1, &out.map).map_err(|e| format!("{name} {label:?} original graph: {e}"))?;
            let e0 = enhance(&m0, &g0, &mut TypePropagationOracle, &EnhanceConfig::default());
            let e1 = enhance(&m1, &g1, &mut TypePropagationOracle, &EnhanceConfig::default());
            graph_correspondence(&m0, &e0.graph, &m1, &e1.graph, &out.map).map_err(|e| format!("{name} {label:?} enhanced graph: {e}"))?;
            let (c0, c1) = (contexts(&m0, &e0.graph), contexts(&m1, &e1.graph));
            let k0: BTreeMap<StmtKey, &HolisticContext> = {
                let keys = statement_keys(&m0, Some(&out.map));
                c0.values().map(|c| (keys[&c.invocation.statement].clone(), c)).collect()
            };
            check(k0.keys().eq(c1.keys()), || format!("{name}: sensitive invocations differ"))?;
            for (k, a) in &k0 {
                context_correspondence(&m0, a, &m1, &c1[k], &out.map).map_err(|e| format!("{name} {label:?} at {k:?}: {e}"))?;
                compared += 1;
            }
        }
    }
    Ok(format!("{} fixtures × 2 labels: graphs isomorphic, {compared} contexts correspond", FIXTURES.len()))
}

fn c11_determinism() -> Outcome_ {
    let tmp = std::env::temp_dir().join(format!("weft-acceptance-{}", std::process::id()));
    let mut n = 0;
    for name in FIXTURES {
        let dir = tmp.join(name);
        let rec = ScanConfig { repo: fixture(name), oracle: OracleMode::Mock, transcript: Some(dir.join("t")), ..ScanConfig::default() };
        run_scan(&rec).map_err(|e| format!("{name}: {e}"))?;
        let mut reports = Vec::new();
        for run in 0..2 {
            let cfg = ScanConfig { oracle: OracleMode::Replay, out: Some(dir.join(format!("r{run}"))), ..rec.clone() };
            run_scan(&cfg).map_err(|e| format!("{name}: {e}"))?;
            reports.push(std::fs::read(dir.join(format!("r{run}/report.json"))).map_err(|e| e.to_string())?);
        }
        check(reports[0] == reports[1], || format!("{name}: replayed reports differ"))?;
        let m = load(name);
        let mut oracle = weft_core::enhance::oracle::ReplayOracle::load(&dir.join("t/resolution.jsonl")).map_err(|e| e.to_string())?;
        let a = scan_model(m, &fixture(name).display().to_string(), &KnowledgeBase::starter(), &[], &ScanConfig::default(), &mut oracle, &KeywordClient::default());
        let again = scan_model(load(name), &fixture(name).display().to_string(), &KnowledgeBase::starter(), &[], &ScanConfig::default(), &mut weft_core::enhance::oracle::ReplayOracle::load(&dir.join("t/resolution.jsonl")).map_err(|e| e.to_string())?, &KeywordClient::default());
        check(a.report.to_json() == again.report.to_json(), || format!("{name}: in-process replay differs"))?;
        n += 1;
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok(format!("{n} fixtures: replayed reports byte-identical"))
}

fn site_targets(g: &UnifiedDependencyGraph) -> BTreeMap<(StmtId, usize), BTreeSet<String>> {
    let mut out: BTreeMap<(StmtId, usize), BTreeSet<String>> = BTreeMap::new();
    for e in g.edges.iter().filter(|e| e.tau == Tau::Call) {
        let (Some(s), Some(k)) = (e.src.stmt(), e.call_index) else { continue };
        let t = match e.dst {
            NodeRef::Stmt(x) => format!("stmt {}", x.0),
            x => format!("ext {}", g.external_node(x).map(|n| n.signature.as_str()).unwrap_or("?")),
        };
        out.entry((s, k)).or_default().insert(t);
    }
    out
}

fn c12_fault_matrix() -> Outcome_ {
    let (mut runs, mut narrowed, mut resolved) = (0, 0, 0);
    let faults: [Fault; 5] = ALL_FAULTS;
    for name in FIXTURES {
        let m = load(name);
        let g0 = assemble_original_udg(&m);
        let good = enhance(&m, &g0, &mut correct_oracle(name, &m), &EnhanceConfig::default());
        let good_t = site_targets(&good.graph);
        let reflective: Vec<((StmtId, usize), NodeRef)> = g0
            .edges
            .iter()
            .filter(|e| e.tau == Tau::Call && g0.external_node(e.dst).is_some_and(|x| x.reflective))
            .map(|e| ((e.src.stmt().unwrap(), e.call_index.unwrap()), e.dst))
            .collect();
        let g0_t = site_targets(&g0);
        narrowed += good_t.iter().filter(|(s, t)| g0_t.get(*s).is_some_and(|o| o.len() > t.len())).count();
        resolved += reflective.iter().filter(|(s, ext)| !good.graph.edges.iter().any(|e| e.src == NodeRef::Stmt(s.0) && e.call_index == Some(s.1) && e.dst == *ext)).count();
        for fault in faults {
            for (period, phase) in [(1, 0), (2, 0), (2, 1), (3, 2)] {
                let mut oracle = SelectiveFault::new(correct_oracle(name, &m), fault, period, phase);
                let bad = enhance(&m, &g0, &mut oracle, &EnhanceConfig::default());
                let bad_t = site_targets(&bad.graph);
                for (site, want) in good_t.iter().filter(|(s, _)| !reflective.iter().any(|(r, _)| r == *s)) {
                    let got = bad_t.get(site).cloned().unwrap_or_default();
                    check(got.is_superset(want), || format!("{name} {fault:?} {period}/{phase}: site {site:?} lost {:?}", want.difference(&got).collect::<Vec<_>>()))?;
                }
                for ((s, k), ext) in &reflective {
                    let kept = bad.graph.edges.iter().any(|e| e.tau == Tau::Call && e.src == NodeRef::Stmt(*s) && e.call_index == Some(*k) && e.dst == *ext);
                    let line = m.stmt(*s).line_span.start;
                    if kept {
                        let resolved_by_good = !good.graph.edges.iter().any(|e| e.src == NodeRef::Stmt(*s) && e.call_index == Some(*k) && e.dst == *ext);
                        let noted = bad.diagnostics.iter().any(|d| d.line == Some(line));
                        check(!resolved_by_good || noted, || format!("{name} {fault:?}: unresolved reflective site line {line} has no diagnostic"))?;
                    } else {
                        let logged = bad.audit.entries.iter().any(|e| e.pass == Pass::Reflection && e.op == AuditOp::Remove && e.src == NodeRef::Stmt(*s) && e.dst == *ext);
                        let replaced = bad.graph.edges.iter().any(|e| e.tau == Tau::Call && e.src == NodeRef::Stmt(*s) && e.call_index == Some(*k) && e.dst.stmt().is_some());
                        check(logged && replaced, || format!("{name} {fault:?}: reflective edge at line {line} dropped without a resolved target"))?;
                    }
                }
                runs += 1;
            }
        }
    }
    check(narrowed > 0 && resolved > 1, || format!("matrix too weak: {narrowed} narrowed sites, {resolved} resolved reflective sites"))?;
    Ok(format!("{runs} faulted runs over {narrowed} narrowed polymorphic and {resolved} resolved reflective sites: targets ⊇ correct, reflective edges kept or resolved"))
}

fn main() {
    #[allow(clippy::type_complexity)]
    let criteria: [(&str, fn() -> Outcome_); 12] = [
        ("template golden context", c1_template_context),
        ("reflective call edge", c2_reflective_edge),
        ("template voting verdict", c3_template_verdict),
        ("pairwise metric identity", c4_pairwise_identity),
        ("labeled-jump reconstruction", c5_labeled_jumps),
        ("summary/oracle equivalence", c6_summary_equivalence),
        ("slice closure equivalence", c7_slice_equivalence),
        ("SCC order soundness", c8_scc_order),
        ("pruning audit replay", c9_pruning_audit),
        ("rename isomorphism", c10_rename_isomorphism),
        ("replay determinism", c11_determinism),
        ("fail-conservative oracle handling", c12_fault_matrix),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let r = std::panic::catch_unwind(run).unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into())));
        match r {
            Ok(detail) => println!("criterion {:>2}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
