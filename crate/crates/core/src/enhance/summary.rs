//! Parameter-to-return taint summaries Φ.
//!
//! Taint is a bit set over formal parameters, propagated along the
//! enhanced control-flow edges of one function by a worklist seeded in
//! reverse post-order. Assignments strongly update their target and
//! weakly update every alias.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::order::AnalysisSequence;
use crate::frontend::{Block, CallKind, FuncId, FunctionDecl, RepoModel, Src, StmtId, StmtKind};
use crate::udg::{NodeRef, Tau, UnifiedDependencyGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryConfig {
    /// Also taint the return value with the conditions guarding each return.
    pub control_dependence: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSummary {
    pub function: FuncId,
    pub phi: BTreeMap<String, bool>,
}

impl FunctionSummary {
    pub fn bottom(f: &FunctionDecl) -> FunctionSummary {
        FunctionSummary { function: f.id, phi: f.params.iter().map(|p| (p.clone(), false)).collect() }
    }

    /// Φ of the parameter at position `i`.
    pub fn at(&self, f: &FunctionDecl, i: usize) -> bool {
        f.params.get(i).and_then(|p| self.phi.get(p)).copied().unwrap_or(false)
    }

    /// True when no entry is true here but true in `prev`.
    pub fn dominates(&self, prev: &FunctionSummary) -> bool {
        prev.phi.iter().all(|(k, v)| !v || self.phi.get(k) == Some(&true))
    }
}

/// Partition of a function's reference variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasSets {
    pub groups: Vec<BTreeSet<String>>,
}

impl AliasSets {
    pub fn group_of(&self, v: &str) -> Option<&BTreeSet<String>> {
        self.groups.iter().find(|g| g.contains(v))
    }
}

/// Flow-insensitive groups joined by `a = b` copies between reference
/// variables. Variables never copied form singletons.
pub fn alias_sets(model: &RepoModel, f: &FunctionDecl) -> AliasSets {
    let vars: Vec<&String> = f.reference_vars.iter().collect();
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..vars.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let n = p[c];
            p[c] = r;
            c = n;
        }
        r
    }
    for s in &f.body {
        for fl in &model.stmt(*s).flows {
            if let Some(w) = &fl.copy_of {
                if let (Some(&a), Some(&b)) = (index.get(fl.target.as_str()), index.get(w.as_str())) {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, v) in vars.iter().enumerate() {
        groups.entry(find(&mut parent, i)).or_default().insert((*v).clone());
    }
    AliasSets { groups: groups.into_values().collect() }
}

/// Graph facts shared by all summary computations.
pub struct SummaryCtx<'a> {
    pub model: &'a RepoModel,
    succ: HashMap<StmtId, Vec<StmtId>>,
    targets: HashMap<(StmtId, usize), Vec<NodeRef>>,
    pub cfg: SummaryConfig,
}

impl<'a> SummaryCtx<'a> {
    pub fn new(model: &'a RepoModel, g: &UnifiedDependencyGraph, cfg: SummaryConfig) -> SummaryCtx<'a> {
        let mut succ: HashMap<StmtId, Vec<StmtId>> = HashMap::new();
        let mut targets: HashMap<(StmtId, usize), Vec<NodeRef>> = HashMap::new();
        for e in &g.edges {
            match (e.tau, e.src.stmt()) {
                (Tau::ControlFlow, Some(a)) => {
                    if let Some(b) = e.dst.stmt() {
                        succ.entry(a).or_default().push(b);
                    }
                }
                (Tau::Call, Some(a)) => {
                    if let Some(k) = e.call_index {
                        targets.entry((a, k)).or_default().push(e.dst);
                    }
                }
                _ => {}
            }
        }
        for v in succ.values_mut() {
            v.sort();
            v.dedup();
        }
        SummaryCtx { model, succ, targets, cfg }
    }
}

type State = BTreeMap<String, FixedBitSet>;

fn join_into(dst: &mut State, src: &State) -> bool {
    let mut changed = false;
    for (k, v) in src {
        match dst.get_mut(k) {
            Some(d) => {
                if !v.is_subset(d) {
                    d.union_with(v);
                    changed = true;
                }
            }
            None => {
                dst.insert(k.clone(), v.clone());
                changed = true;
            }
        }
    }
    changed
}

/// `a.b.c` reads `a`, `a.b` and `a.b.c`.
fn read(st: &State, v: &str, n: usize) -> FixedBitSet {
    let mut out = FixedBitSet::with_capacity(n);
    for (i, _) in v.match_indices('.').chain(std::iter::once((v.len(), ""))) {
        if let Some(t) = st.get(&v[..i]) {
            out.union_with(t);
        }
    }
    out
}

struct Eval<'c, 'a> {
    ctx: &'c SummaryCtx<'a>,
    known: &'c BTreeMap<FuncId, FunctionSummary>,
    stmt: StmtId,
    n: usize,
    memo: Vec<Option<FixedBitSet>>,
}

impl Eval<'_, '_> {
    fn srcs(&mut self, st: &State, srcs: &[Src]) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.n);
        for s in srcs {
            match s {
                Src::Var(v) => out.union_with(&read(st, v, self.n)),
                Src::Call(k) => out.union_with(&self.call(st, *k)),
            }
        }
        out
    }

    fn call(&mut self, st: &State, k: usize) -> FixedBitSet {
        if let Some(v) = &self.memo[k] {
            return v.clone();
        }
        let model = self.ctx.model;
        let c = &model.stmt(self.stmt).calls[k];
        let args: Vec<FixedBitSet> = c.args.iter().map(|a| self.srcs(st, a)).collect();
        let recv = self.srcs(st, &c.recv_sources);
        let all = || {
            let mut o = recv.clone();
            for a in &args {
                o.union_with(a);
            }
            o
        };
        let targets = self.ctx.targets.get(&(self.stmt, k)).map(Vec::as_slice).unwrap_or(&[]);
        let out = if c.kind != CallKind::Method || targets.is_empty() || targets.iter().any(|t| matches!(t, NodeRef::External(_))) {
            all()
        } else {
            let mut o = FixedBitSet::with_capacity(self.n);
            for t in targets {
                let callee = t.stmt().and_then(|s| model.func_of_entry(s));
                match callee.map(|f| (model.func(f), self.known.get(&f))) {
                    Some((f, Some(sum))) if f.params.len() == args.len() => {
                        for (i, a) in args.iter().enumerate() {
                            if sum.at(f, i) {
                                o.union_with(a);
                            }
                        }
                    }
                    _ => o.union_with(&all()),
                }
            }
            o
        };
        self.memo[k] = Some(out.clone());
        out
    }
}

/// Condition statements enclosing each return of `tree`.
fn guards(tree: &Block) -> HashMap<StmtId, Vec<StmtId>> {
    fn walk(b: &Block, stack: &mut Vec<StmtId>, out: &mut HashMap<StmtId, Vec<StmtId>>) {
        let nested = |c: StmtId, inner: &[&Block], stack: &mut Vec<StmtId>, out: &mut HashMap<StmtId, Vec<StmtId>>| {
            stack.push(c);
            for i in inner {
                walk(i, stack, out);
            }
            stack.pop();
        };
        match b {
            Block::Return(s) => {
                out.insert(*s, stack.clone());
            }
            Block::Seq(items) => items.iter().for_each(|i| walk(i, stack, out)),
            Block::If { cond, then, els } => {
                let mut inner = vec![&**then];
                if let Some(e) = els {
                    inner.push(e);
                }
                nested(*cond, &inner, stack, out);
            }
            Block::While { cond, body } | Block::DoWhile { body, cond } => nested(*cond, &[body], stack, out),
            Block::For { cond: Some(c), body, .. } => nested(*c, &[body], stack, out),
            Block::For { cond: None, body, .. } => walk(body, stack, out),
            Block::ForEach { header, body } => nested(*header, &[body], stack, out),
            Block::Switch { selector, groups, .. } => nested(*selector, &groups.iter().collect::<Vec<_>>(), stack, out),
            Block::Labeled { body, .. } => walk(body, stack, out),
            Block::Try { body, catches, finally } => {
                walk(body, stack, out);
                catches.iter().for_each(|c| walk(c, stack, out));
                if let Some(f) = finally {
                    walk(f, stack, out);
                }
            }
            Block::Simple(_) | Block::Throw(_) | Block::Break { .. } | Block::Continue { .. } => {}
        }
    }
    let mut out = HashMap::new();
    walk(tree, &mut Vec::new(), &mut out);
    out
}

fn reverse_post_order(entry: StmtId, succ: &HashMap<StmtId, Vec<StmtId>>) -> Vec<StmtId> {
    let mut seen = BTreeSet::from([entry]);
    let mut post = Vec::new();
    let mut stack: Vec<(StmtId, usize)> = vec![(entry, 0)];
    while let Some((n, i)) = stack.pop() {
        let ss = succ.get(&n).map(Vec::as_slice).unwrap_or(&[]);
        if i < ss.len() {
            stack.push((n, i + 1));
            if seen.insert(ss[i]) {
                stack.push((ss[i], 0));
            }
        } else {
            post.push(n);
        }
    }
    post.reverse();
    post
}

/// Φ for one function given callee summaries in `known`.
pub fn summarize(ctx: &SummaryCtx<'_>, f: &FunctionDecl, known: &BTreeMap<FuncId, FunctionSummary>, aliases: &AliasSets) -> FunctionSummary {
    let model = ctx.model;
    let n = f.params.len();
    let rpo = reverse_post_order(f.entry, &ctx.succ);
    let pos: HashMap<StmtId, usize> = rpo.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let guards = if ctx.cfg.control_dependence { guards(&f.tree) } else { HashMap::new() };
    let mut seed = State::new();
    for (i, p) in f.params.iter().enumerate() {
        let mut b = FixedBitSet::with_capacity(n);
        b.insert(i);
        seed.insert(p.clone(), b);
    }
    let mut inn: Vec<Option<State>> = vec![None; rpo.len()];
    inn[0] = Some(seed);
    let mut work: BTreeSet<usize> = BTreeSet::from([0]);
    while let Some(i) = work.pop_first() {
        let s = rpo[i];
        let mut st = inn[i].clone().unwrap_or_default();
        let node = model.stmt(s);
        if node.kind != StmtKind::Entry && node.kind != StmtKind::Exit {
            let before = st.clone();
            let mut ev = Eval { ctx, known, stmt: s, n, memo: vec![None; node.calls.len()] };
            for fl in &node.flows {
                let mut val = ev.srcs(&st, &fl.sources);
                if fl.target == f.return_var {
                    for c in guards.get(&s).into_iter().flatten() {
                        for u in &model.stmt(*c).uses {
                            val.union_with(&read(&before, u, n));
                        }
                    }
                }
                let (base, field) = match fl.target.split_once('.') {
                    Some((b, rest)) => (b, Some(rest)),
                    None => (fl.target.as_str(), None),
                };
                if let Some(group) = aliases.group_of(base) {
                    for a in group.iter().filter(|a| a.as_str() != base) {
                        let key = match field {
                            Some(r) => format!("{a}.{r}"),
                            None => a.clone(),
                        };
                        st.entry(key).or_insert_with(|| FixedBitSet::with_capacity(n)).union_with(&val);
                    }
                }
                st.insert(fl.target.clone(), val);
            }
        }
        for t in ctx.succ.get(&s).into_iter().flatten() {
            let Some(&j) = pos.get(t) else { continue };
            let changed = match &mut inn[j] {
                Some(d) => join_into(d, &st),
                slot @ None => {
                    *slot = Some(st.clone());
                    true
                }
            };
            if changed {
                work.insert(j);
            }
        }
    }
    let ret = pos.get(&f.exit).and_then(|&i| inn[i].as_ref()).and_then(|s| s.get(&f.return_var)).cloned().unwrap_or_else(|| FixedBitSet::with_capacity(n));
    FunctionSummary { function: f.id, phi: f.params.iter().enumerate().map(|(i, p)| (p.clone(), ret.contains(i))).collect() }
}

/// Convenience wrapper building the graph index for a single function.
pub fn compute_function_summary(model: &RepoModel, g: &UnifiedDependencyGraph, f: FuncId, known: &BTreeMap<FuncId, FunctionSummary>, cfg: SummaryConfig) -> FunctionSummary {
    let ctx = SummaryCtx::new(model, g, cfg);
    let decl = model.func(f);
    summarize(&ctx, decl, known, &alias_sets(model, decl))
}

/// Iterates one component from all-false until no Φ changes. Returns
/// every iterate, the last being the fixed point.
pub fn fixed_point_scc(ctx: &SummaryCtx<'_>, members: &[FuncId], known: &mut BTreeMap<FuncId, FunctionSummary>, aliases: &BTreeMap<FuncId, AliasSets>) -> Vec<Vec<FunctionSummary>> {
    let model = ctx.model;
    for m in members {
        known.insert(*m, FunctionSummary::bottom(model.func(*m)));
    }
    let empty = AliasSets::default();
    let mut iterates = Vec::new();
    loop {
        let mut changed = false;
        for m in members {
            let s = summarize(ctx, model.func(*m), known, aliases.get(m).unwrap_or(&empty));
            if s != known[m] {
                debug_assert!(s.dominates(&known[m]));
                known.insert(*m, s);
                changed = true;
            }
        }
        iterates.push(members.iter().map(|m| known[m].clone()).collect());
        let recursive = members.len() > 1 || members.iter().any(|m| calls_self(ctx, model.func(*m)));
        if !changed || !recursive {
            return iterates;
        }
    }
}

fn calls_self(ctx: &SummaryCtx<'_>, f: &FunctionDecl) -> bool {
    f.body.iter().any(|s| {
        ctx.model.stmt(*s).calls.iter().enumerate().any(|(k, _)| ctx.targets.get(&(*s, k)).is_some_and(|t| t.contains(&NodeRef::Stmt(f.entry))))
    })
}

/// Φ for every function, component by component in `order`.
pub fn compute_all_summaries(model: &RepoModel, g: &UnifiedDependencyGraph, order: &AnalysisSequence, cfg: &SummaryConfig) -> BTreeMap<FuncId, FunctionSummary> {
    let ctx = SummaryCtx::new(model, g, *cfg);
    let aliases: BTreeMap<FuncId, AliasSets> = model.functions.iter().map(|f| (f.id, alias_sets(model, f))).collect();
    let mut known = BTreeMap::new();
    for c in &order.components {
        fixed_point_scc(&ctx, &c.members, &mut known, &aliases);
    }
    known
}
