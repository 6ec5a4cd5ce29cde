//! Seeded generators: integer-only Java programs with (mutually) recursive
//! static calls, random dependency graphs and random call graphs.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use weft_core::frontend::{FuncId, StmtId};
use weft_core::udg::{NodeRef, UdgEdge, UnifiedDependencyGraph};

#[derive(Debug, Clone, Copy)]
pub struct ProgramShape {
    pub max_functions: usize,
    pub max_params: usize,
    pub max_depth: usize,
    pub max_stmts: usize,
    /// Adds a call cycle through the first functions and allows calls in
    /// any direction; otherwise calls only go to later functions.
    pub force_recursion: bool,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape { max_functions: 20, max_params: 3, max_depth: 2, max_stmts: 5, force_recursion: false }
    }
}

struct Gen<'a> {
    rng: StdRng,
    arity: Vec<usize>,
    shape: &'a ProgramShape,
    out: String,
    next_var: usize,
    /// Cycle the current function must close with a call.
    must_call: Option<usize>,
    current: usize,
    /// Calls go only to higher-numbered functions.
    acyclic: bool,
}

impl Gen<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        self.out.push_str(&"    ".repeat(depth + 2));
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn atom(&mut self, scope: &[String]) -> String {
        if scope.is_empty() || self.rng.random_bool(0.2) {
            return self.rng.random_range(0..10).to_string();
        }
        scope[self.rng.random_range(0..scope.len())].clone()
    }

    fn call(&mut self, f: usize, scope: &[String], budget: usize) -> String {
        let args: Vec<String> = (0..self.arity[f]).map(|_| self.expr(scope, budget.saturating_sub(1))).collect();
        format!("f{f}({})", args.join(", "))
    }

    fn expr(&mut self, scope: &[String], budget: usize) -> String {
        if let Some(f) = self.must_call.take() {
            return self.call(f, scope, budget.max(1));
        }
        if budget == 0 {
            return self.atom(scope);
        }
        match self.rng.random_range(0..10) {
            0..=2 => self.atom(scope),
            3..=5 => {
                let op = ["+", "-", "*"][self.rng.random_range(0..3)];
                format!("{} {op} {}", self.expr(scope, budget - 1), self.expr(scope, budget - 1))
            }
            6..=7 => {
                let lo = if self.acyclic { self.current + 1 } else { 0 };
                if lo >= self.arity.len() {
                    return self.atom(scope);
                }
                let f = self.rng.random_range(lo..self.arity.len());
                self.call(f, scope, budget)
            }
            8 => format!("Math.max({}, {})", self.expr(scope, budget - 1), self.expr(scope, budget - 1)),
            _ => format!("Math.abs({})", self.expr(scope, budget - 1)),
        }
    }

    fn cond(&mut self, scope: &[String]) -> String {
        let op = ["<", ">", "==", "!="][self.rng.random_range(0..4)];
        format!("{} {op} {}", self.atom(scope), self.atom(scope))
    }

    /// Emits a block; `scope` is restored on exit.
    fn block(&mut self, depth: usize, scope: &mut Vec<String>, ret_at_end: bool) {
        let mark = scope.len();
        let n = self.rng.random_range(0..=self.shape.max_stmts);
        for _ in 0..n {
            match self.rng.random_range(0..10) {
                0..=3 => {
                    let v = format!("v{}", self.next_var);
                    self.next_var += 1;
                    let e = self.expr(scope, 2);
                    self.line(depth, &format!("int {v} = {e};"));
                    scope.push(v);
                }
                4..=6 if !scope.is_empty() => {
                    let t = scope[self.rng.random_range(0..scope.len())].clone();
                    let e = self.expr(scope, 2);
                    self.line(depth, &format!("{t} = {e};"));
                }
                7 if depth < self.shape.max_depth => {
                    let c = self.cond(scope);
                    self.line(depth, &format!("if ({c}) {{"));
                    let r = self.rng.random_bool(0.3);
                    self.block(depth + 1, scope, r);
                    self.line(depth, "} else {");
                    self.block(depth + 1, scope, false);
                    self.line(depth, "}");
                }
                8 if depth < self.shape.max_depth => {
                    let c = self.cond(scope);
                    self.line(depth, &format!("while ({c}) {{"));
                    self.block(depth + 1, scope, false);
                    self.line(depth, "}");
                }
                _ => {
                    let e = self.expr(scope, 1);
                    let v = format!("v{}", self.next_var);
                    self.next_var += 1;
                    self.line(depth, &format!("int {v} = {e};"));
                    scope.push(v);
                }
            }
        }
        if ret_at_end {
            let e = self.expr(scope, 2);
            self.line(depth, &format!("return {e};"));
        }
        scope.truncate(mark);
    }
}

/// One file `G.java` holding class `G` with static `int f<i>(int p0, ...)`.
pub fn generate_program(seed: u64, shape: &ProgramShape) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..=shape.max_functions.max(1));
    let n = if shape.force_recursion { n.max(2) } else { n };
    let arity: Vec<usize> = (0..n).map(|_| rng.random_range(1..=shape.max_params.max(1))).collect();
    let cycle = if shape.force_recursion { rng.random_range(1..=n.min(3)) } else { 0 };
    let mut g = Gen { rng, arity: arity.clone(), shape, out: String::from("class G {\n"), next_var: 0, must_call: None, current: 0, acyclic: !shape.force_recursion };
    for (f, k) in arity.iter().enumerate() {
        let params: Vec<String> = (0..*k).map(|i| format!("p{i}")).collect();
        let decl: Vec<String> = params.iter().map(|p| format!("int {p}")).collect();
        g.out.push_str(&format!("    static int f{f}({}) {{\n", decl.join(", ")));
        g.next_var = 0;
        g.current = f;
        g.must_call = (f < cycle).then(|| (f + 1) % cycle);
        let mut scope = params;
        g.block(0, &mut scope, true);
        g.out.push_str("    }\n");
    }
    g.out.push_str("}\n");
    g.out
}

#[derive(Debug, Clone, Copy)]
pub struct GraphShape {
    pub max_nodes: usize,
    pub max_externals: usize,
    pub edge_factor: f64,
}

impl Default for GraphShape {
    fn default() -> Self {
        GraphShape { max_nodes: 200, max_externals: 6, edge_factor: 2.0 }
    }
}

/// Random mix of control-flow, data and call edges over statement and
/// external nodes, with duplicates and self-loops allowed.
pub fn random_udg(seed: u64, shape: &GraphShape) -> UnifiedDependencyGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..=shape.max_nodes);
    let x = rng.random_range(0..=shape.max_externals);
    let mut g = UnifiedDependencyGraph::default();
    let externals: Vec<NodeRef> = (0..x).map(|i| g.external(&format!("lib.X.m{i}/0"), i % 3 == 0)).collect();
    for i in 0..n {
        g.nodes.insert(NodeRef::Stmt(StmtId(i as u32)));
    }
    let m = (n as f64 * shape.edge_factor * rng.random_range(0.2..1.0)) as usize;
    let s = |r: &mut StdRng| StmtId(r.random_range(0..n) as u32);
    for _ in 0..m {
        let a = s(&mut rng);
        let e = match rng.random_range(0..10) {
            0..=3 => UdgEdge::cf(a, s(&mut rng)),
            4..=6 => UdgEdge::dd(a, s(&mut rng), ["a", "b", "c.d"][rng.random_range(0..3)]),
            _ => {
                let dst = if !externals.is_empty() && rng.random_bool(0.25) { externals[rng.random_range(0..externals.len())] } else { NodeRef::Stmt(s(&mut rng)) };
                UdgEdge::call(a, dst, rng.random_range(0..2))
            }
        };
        g.add_edge(e);
    }
    // A few edges out of externals, which real graphs never have.
    if !externals.is_empty() && rng.random_bool(0.3) {
        let mut e = UdgEdge::cf(s(&mut rng), s(&mut rng));
        e.src = externals[0];
        g.add_edge(e);
    }
    g
}

/// Random caller → callee pairs over `n` functions.
pub fn random_call_graph(seed: u64, max_functions: usize) -> (usize, BTreeSet<(FuncId, FuncId)>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_functions);
    let density = rng.random_range(0.0..3.0 / n as f64 + 0.05);
    let mut edges = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if rng.random_bool(density.min(1.0)) {
                edges.insert((FuncId(a as u32), FuncId(b as u32)));
            }
        }
    }
    (n, edges)
}
