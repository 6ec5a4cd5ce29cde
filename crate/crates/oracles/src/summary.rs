//! Φ by explicit reaching definitions and backward dependence search,
//! iterated over all functions at once from all-false.
//!
//! Shares no code with the pipeline's bit-vector worklist. Alias groups
//! are not modeled, so programs must not copy reference variables.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;
use weft_core::enhance::alias_sets;
use weft_core::frontend::{CallKind, FuncId, FunctionDecl, RepoModel, Src, StmtId, StmtKind};
use weft_core::udg::{NodeRef, Tau, UnifiedDependencyGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("work budget of {0} steps exceeded")]
    BudgetExceeded(usize),
    #[error("function {0} copies reference variables; aliasing is outside this oracle")]
    Aliasing(String),
}

/// A definition: a parameter at entry or one flow of a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Def {
    Param(usize),
    Flow(StmtId, usize),
}

type Phi = BTreeMap<FuncId, Vec<bool>>;

struct Graph {
    preds: HashMap<StmtId, Vec<StmtId>>,
    succs: HashMap<StmtId, Vec<StmtId>>,
    targets: HashMap<(StmtId, usize), Vec<NodeRef>>,
}

impl Graph {
    fn new(g: &UnifiedDependencyGraph) -> Graph {
        let mut out = Graph { preds: HashMap::new(), succs: HashMap::new(), targets: HashMap::new() };
        for e in &g.edges {
            match (e.tau, e.src.stmt(), e.dst.stmt()) {
                (Tau::ControlFlow, Some(a), Some(b)) => {
                    out.succs.entry(a).or_default().push(b);
                    out.preds.entry(b).or_default().push(a);
                }
                (Tau::Call, Some(a), _) => out.targets.entry((a, e.call_index.unwrap_or(0))).or_default().push(e.dst),
                _ => {}
            }
        }
        out
    }
}

struct Budget {
    left: usize,
    cap: usize,
}

impl Budget {
    fn spend(&mut self) -> Result<(), OracleError> {
        if self.left == 0 {
            return Err(OracleError::BudgetExceeded(self.cap));
        }
        self.left -= 1;
        Ok(())
    }
}

struct Func<'a> {
    model: &'a RepoModel,
    gr: &'a Graph,
    f: &'a FunctionDecl,
    reachable: BTreeSet<StmtId>,
    /// Flow index at which each call of a statement is first evaluated.
    first_eval: HashMap<StmtId, Vec<usize>>,
}

fn mark_calls(srcs: &[Src], calls: &[weft_core::frontend::CallSite], at: usize, out: &mut [usize]) {
    for s in srcs {
        if let Src::Call(k) = s {
            if out[*k] == usize::MAX {
                out[*k] = at;
                mark_calls(&calls[*k].recv_sources, calls, at, out);
                for a in &calls[*k].args {
                    mark_calls(a, calls, at, out);
                }
            }
        }
    }
}

impl<'a> Func<'a> {
    fn new(model: &'a RepoModel, gr: &'a Graph, f: &'a FunctionDecl) -> Func<'a> {
        let mut reachable = BTreeSet::from([f.entry]);
        let mut q = VecDeque::from([f.entry]);
        while let Some(n) = q.pop_front() {
            for m in gr.succs.get(&n).into_iter().flatten() {
                if reachable.insert(*m) {
                    q.push_back(*m);
                }
            }
        }
        let mut first_eval = HashMap::new();
        for s in &f.body {
            let st = model.stmt(*s);
            let mut v = vec![usize::MAX; st.calls.len()];
            for (i, fl) in st.flows.iter().enumerate() {
                mark_calls(&fl.sources, &st.calls, i, &mut v);
            }
            first_eval.insert(*s, v);
        }
        Func { model, gr, f, reachable, first_eval }
    }

    fn defines(&self, s: StmtId) -> bool {
        !matches!(self.model.stmt(s).kind, StmtKind::Entry | StmtKind::Exit)
    }

    /// Definitions of the exact key `u` reaching the point before flow
    /// `pos` of `s`.
    fn reaching(&self, s: StmtId, pos: usize, u: &str, budget: &mut Budget) -> Result<BTreeSet<Def>, OracleError> {
        let mut out = BTreeSet::new();
        if self.defines(s) {
            if let Some(i) = self.model.stmt(s).flows[..pos].iter().rposition(|fl| fl.target == u) {
                out.insert(Def::Flow(s, i));
                return Ok(out);
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack: Vec<StmtId> = self.gr.preds.get(&s).cloned().unwrap_or_default();
        while let Some(p) = stack.pop() {
            budget.spend()?;
            if !self.reachable.contains(&p) || !seen.insert(p) {
                continue;
            }
            if self.defines(p) {
                if let Some(i) = self.model.stmt(p).flows.iter().rposition(|fl| fl.target == u) {
                    out.insert(Def::Flow(p, i));
                    continue;
                }
            }
            if p == self.f.entry {
                if let Some(i) = self.f.params.iter().position(|x| x == u) {
                    out.insert(Def::Param(i));
                }
                continue;
            }
            stack.extend(self.gr.preds.get(&p).into_iter().flatten());
        }
        Ok(out)
    }

    fn read(&self, s: StmtId, pos: usize, v: &str, budget: &mut Budget, out: &mut BTreeSet<Def>) -> Result<(), OracleError> {
        let mut prefix = String::new();
        for (i, seg) in v.split('.').enumerate() {
            if i > 0 {
                prefix.push('.');
            }
            prefix.push_str(seg);
            out.extend(self.reaching(s, pos, &prefix, budget)?);
        }
        Ok(())
    }

    fn sources(&self, s: StmtId, pos: usize, srcs: &[Src], prev: &Phi, budget: &mut Budget, out: &mut BTreeSet<Def>) -> Result<(), OracleError> {
        for src in srcs {
            match src {
                Src::Var(v) => self.read(s, pos, v, budget, out)?,
                Src::Call(k) => self.call(s, *k, prev, budget, out)?,
            }
        }
        Ok(())
    }

    fn call(&self, s: StmtId, k: usize, prev: &Phi, budget: &mut Budget, out: &mut BTreeSet<Def>) -> Result<(), OracleError> {
        let c = &self.model.stmt(s).calls[k];
        let pos = self.first_eval[&s][k];
        let targets = self.gr.targets.get(&(s, k)).map(Vec::as_slice).unwrap_or(&[]);
        let everything = c.kind != CallKind::Method
            || targets.is_empty()
            || targets.iter().any(|t| {
                let callee = t.stmt().and_then(|e| self.model.func_of_entry(e));
                callee.is_none_or(|f| self.model.func(f).params.len() != c.args.len())
            });
        if everything {
            self.sources(s, pos, &c.recv_sources, prev, budget, out)?;
            for a in &c.args {
                self.sources(s, pos, a, prev, budget, out)?;
            }
            return Ok(());
        }
        for (i, a) in c.args.iter().enumerate() {
            let used = targets.iter().any(|t| {
                let f = self.model.func_of_entry(t.stmt().unwrap()).unwrap();
                prev[&f][i]
            });
            if used {
                self.sources(s, pos, a, prev, budget, out)?;
            }
        }
        Ok(())
    }

    fn deps(&self, d: Def, prev: &Phi, budget: &mut Budget) -> Result<BTreeSet<Def>, OracleError> {
        let mut out = BTreeSet::new();
        if let Def::Flow(s, i) = d {
            let fl = &self.model.stmt(s).flows[i];
            self.sources(s, i, &fl.sources, prev, budget, &mut out)?;
        }
        Ok(out)
    }

    fn phi(&self, prev: &Phi, budget: &mut Budget) -> Result<Vec<bool>, OracleError> {
        let mut out = vec![false; self.f.params.len()];
        if !self.reachable.contains(&self.f.exit) {
            return Ok(out);
        }
        let mut seen = self.reaching(self.f.exit, 0, &self.f.return_var, budget)?;
        let mut q: VecDeque<Def> = seen.iter().copied().collect();
        while let Some(d) = q.pop_front() {
            budget.spend()?;
            if let Def::Param(i) = d {
                out[i] = true;
            }
            for n in self.deps(d, prev, budget)? {
                if seen.insert(n) {
                    q.push_back(n);
                }
            }
        }
        Ok(out)
    }
}

type Summaries = BTreeMap<FuncId, BTreeMap<String, bool>>;

/// Φ for every function of `model` over the control-flow and call edges
/// of `g`. Rounds recompute every function from the previous round's
/// summaries until nothing changes; `budget` caps elementary steps.
pub fn brute_force_summary_oracle(model: &RepoModel, g: &UnifiedDependencyGraph, budget: usize) -> Result<Summaries, OracleError> {
    let params = model.functions.iter().map(|f| f.params.len()).sum::<usize>();
    rounds(model, g, params + 2, budget)
}

/// Φ with in-repo calls inlined `depth` levels deep; a call below the
/// cutoff carries no parameter to the result. Round `k` of the fixed
/// point is exactly the depth-`k` unrolling.
pub fn depth_bounded_summary_oracle(model: &RepoModel, g: &UnifiedDependencyGraph, depth: usize, budget: usize) -> Result<Summaries, OracleError> {
    rounds(model, g, depth + 1, budget)
}

fn rounds(model: &RepoModel, g: &UnifiedDependencyGraph, max: usize, budget: usize) -> Result<Summaries, OracleError> {
    for f in &model.functions {
        if alias_sets(model, f).groups.iter().any(|g| g.len() > 1) {
            return Err(OracleError::Aliasing(f.name.clone()));
        }
    }
    let gr = Graph::new(g);
    let funcs: Vec<Func<'_>> = model.functions.iter().map(|f| Func::new(model, &gr, f)).collect();
    let mut budget = Budget { left: budget, cap: budget };
    let mut phi: Phi = model.functions.iter().map(|f| (f.id, vec![false; f.params.len()])).collect();
    for _ in 0..max {
        let mut next = Phi::new();
        for f in &funcs {
            next.insert(f.f.id, f.phi(&phi, &mut budget)?);
        }
        if next == phi {
            break;
        }
        phi = next;
    }
    Ok(model.functions.iter().map(|f| (f.id, f.params.iter().cloned().zip(phi[&f.id].iter().copied()).collect())).collect())
}
