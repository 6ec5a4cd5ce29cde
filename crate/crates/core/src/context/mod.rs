//! Holistic context around a sensitive invocation: explicit data and
//! control slices plus the usage, definition and declaration statements
//! they depend on without a connecting edge.

mod invocations;
mod render;
mod slice;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::enhance::globals::resolve_global_use;
use crate::frontend::{ClassId, Owner, RepoModel, StmtId, StmtKind};
use crate::udg::{Adjacency, NodeRef, Tau, UnifiedDependencyGraph};

pub use invocations::{call_descriptors, find_sensitive_invocations, Origin, SensitiveInvocation};
pub use render::{line_ranges, line_set, numbered_rows, ranges, render_lines, CharRatioTokenizer, LineIndex, LineSet, Tokenizer};
pub use slice::{control_closure, data_closure, ControlReach, Direction};

pub const DEFAULT_HOP_LIMIT: usize = 3;
pub const DEFAULT_TOKEN_BUDGET: usize = 16_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceKind {
    Data,
    Control,
    Usage,
    Definition,
    Declaration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSlice {
    pub kind: SliceKind,
    /// Ordered by (file, start line).
    pub statements: Vec<StmtId>,
    pub boundary_notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextConfig {
    pub hop_limit: usize,
    pub token_budget: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig { hop_limit: DEFAULT_HOP_LIMIT, token_budget: DEFAULT_TOKEN_BUDGET }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolisticContext {
    pub invocation: SensitiveInvocation,
    pub data: ContextSlice,
    pub control: ContextSlice,
    pub usage: ContextSlice,
    pub definition: ContextSlice,
    pub declaration: ContextSlice,
    /// Data ∪ control.
    pub explicit: Vec<StmtId>,
    /// Usage ∪ definition ∪ declaration.
    pub implicit: Vec<StmtId>,
    /// Explicit ∪ implicit, minus anything dropped for the budget.
    pub all: Vec<StmtId>,
    pub lines: BTreeMap<String, Vec<(u32, u32)>>,
    pub rendered: String,
    pub tokens: usize,
    /// Statements removed to fit the token budget.
    pub dropped: Vec<StmtId>,
    pub notes: Vec<String>,
}

/// File-safe form of an invocation id.
pub fn dump_name(inv: &SensitiveInvocation) -> String {
    let id: String = inv.id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("{id}.ctx.txt")
}

/// Writes `<out>/<invocation-id>.ctx.txt`.
pub fn dump_context(out: &Path, ctx: &HolisticContext) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(dump_name(&ctx.invocation)), &ctx.rendered)
}

/// Read-only view over one model and its enhanced graph.
pub struct Extractor<'a> {
    pub model: &'a RepoModel,
    pub g: &'a UnifiedDependencyGraph,
    pub config: ContextConfig,
    adj: Adjacency,
    index: LineIndex,
}

fn dotted_prefixes(v: &str) -> impl Iterator<Item = &str> {
    let ends: Vec<usize> = v.match_indices('.').map(|(i, _)| i).chain(std::iter::once(v.len())).collect();
    ends.into_iter().rev().map(move |e| &v[..e])
}

impl<'a> Extractor<'a> {
    pub fn new(model: &'a RepoModel, g: &'a UnifiedDependencyGraph, config: ContextConfig) -> Extractor<'a> {
        Extractor { model, g, config, adj: g.adjacency(), index: LineIndex::new(model) }
    }

    fn order(&self, set: impl IntoIterator<Item = StmtId>) -> Vec<StmtId> {
        let mut v: Vec<StmtId> = set.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        v.sort_by_key(|s| {
            let st = self.model.stmt(*s);
            (st.file, st.line_span.start, st.byte_span.0, *s)
        });
        v
    }

    fn slice(&self, kind: SliceKind, set: impl IntoIterator<Item = StmtId>, notes: BTreeSet<String>) -> ContextSlice {
        ContextSlice { kind, statements: self.order(set), boundary_notes: notes.into_iter().collect() }
    }

    fn loc(&self, s: StmtId) -> String {
        format!("{}:{}", self.model.path_of(s), self.model.stmt(s).line_span.start)
    }

    fn external_note(&self, n: NodeRef) -> String {
        match self.g.external_node(n) {
            Some(x) => format!("external callee {}", x.signature),
            None => "external callee".to_string(),
        }
    }

    pub fn data_slice(&self, s: StmtId, dir: Direction) -> ContextSlice {
        self.slice(SliceKind::Data, data_closure(self.g, &self.adj, &[s], dir), BTreeSet::new())
    }

    pub fn control_slice(&self, s: StmtId, hop_limit: usize) -> ContextSlice {
        let r = control_closure(self.g, &self.adj, s, hop_limit);
        let mut notes: BTreeSet<String> = r.externals.iter().map(|n| self.external_note(*n)).collect();
        for t in &r.truncated_at {
            notes.insert(format!("hop limit {hop_limit} reached at {}", self.loc(*t)));
        }
        self.slice(SliceKind::Control, r.statements, notes)
    }

    /// Data slice in both directions ∪ control slice.
    pub fn explicit_context(&self, s: StmtId) -> (ContextSlice, ContextSlice) {
        (self.data_slice(s, Direction::Both), self.control_slice(s, self.config.hop_limit))
    }

    /// Forward data slices from the entries of in-repo callees of calls in `c_e`.
    pub fn usage_context(&self, c_e: &[StmtId]) -> ContextSlice {
        let mut entries = BTreeSet::new();
        let mut notes = BTreeSet::new();
        for &s in c_e {
            for &i in self.adj.outgoing(NodeRef::Stmt(s)) {
                let e = &self.g.edges[i];
                if e.tau != Tau::Call {
                    continue;
                }
                match e.dst.stmt() {
                    Some(entry) => {
                        entries.insert(entry);
                    }
                    None => {
                        notes.insert(self.external_note(e.dst));
                    }
                }
            }
        }
        let entries: Vec<StmtId> = entries.into_iter().collect();
        self.slice(SliceKind::Usage, data_closure(self.g, &self.adj, &entries, Direction::Forward), notes)
    }

    fn enclosing_class(&self, s: StmtId) -> Option<ClassId> {
        match self.model.stmt(s).owner {
            Owner::Function(f) => Some(self.model.func(f).class),
            Owner::Global => self.model.globals.iter().find(|g| g.statement == s).and_then(|g| g.class),
        }
    }

    /// Global definition that `v`, read at `at`, names.
    fn global_def(&self, at: StmtId, v: &str) -> Option<StmtId> {
        let file = self.model.stmt(at).file;
        let segs: Vec<&str> = v.split('.').collect();
        for i in 1..segs.len() {
            if let Some(c) = self.model.resolve_type(&segs[..i].join("."), file) {
                return self.model.find_field(segs[i], Some(c)).map(|g| g.statement);
            }
        }
        if let Some(gd) = self.model.globals.iter().find(|g| g.statement == at) {
            return resolve_global_use(self.model, gd, v).map(|d| d.statement);
        }
        self.model.find_field(segs[0], self.enclosing_class(at)).map(|g| g.statement)
    }

    /// Variables read in `input` but defined nowhere in it: a backward data
    /// slice from the usage when a data edge brings `v` in, otherwise a
    /// backward slice from the global definition of `v`.
    pub fn definition_context(&self, input: &[StmtId]) -> ContextSlice {
        let defs: BTreeSet<&str> = input.iter().flat_map(|s| self.model.stmt(*s).defs.iter().map(String::as_str)).collect();
        let mut seeds = BTreeSet::new();
        let mut notes = BTreeSet::new();
        for &u in input {
            let st = self.model.stmt(u);
            let uses: Box<dyn Iterator<Item = &String>> = match self.model.globals.iter().find(|g| g.statement == u) {
                Some(g) => Box::new(st.uses.iter().chain(g.rhs_uses.iter())),
                None => Box::new(st.uses.iter()),
            };
            for v in uses {
                if dotted_prefixes(v).any(|p| defs.contains(p)) {
                    continue;
                }
                let incoming: Vec<StmtId> = self
                    .adj
                    .incoming(NodeRef::Stmt(u))
                    .iter()
                    .map(|i| &self.g.edges[*i])
                    .filter(|e| e.tau == Tau::DataDependency && e.variable.as_deref().is_some_and(|x| dotted_prefixes(v).any(|p| p == x)))
                    .filter_map(|e| e.src.stmt())
                    .collect();
                if !incoming.is_empty() {
                    seeds.extend(incoming);
                } else if let Some(d) = self.global_def(u, v) {
                    seeds.insert(d);
                } else {
                    notes.insert(format!("unresolved variable `{v}` at {}", self.loc(u)));
                }
            }
        }
        let seeds: Vec<StmtId> = seeds.into_iter().collect();
        self.slice(SliceKind::Definition, data_closure(self.g, &self.adj, &seeds, Direction::Backward), notes)
    }

    /// Package, imports and top-level class declarations of every file in
    /// `c`, plus the declarations of classes enclosing its statements.
    pub fn declaration_context(&self, c: &[StmtId]) -> ContextSlice {
        let files: BTreeSet<_> = c.iter().map(|s| self.model.stmt(*s).file).collect();
        let mut out = BTreeSet::new();
        for g in &self.model.globals {
            let st = self.model.stmt(g.statement);
            if !files.contains(&st.file) {
                continue;
            }
            let top = match g.kind {
                StmtKind::PackageDecl | StmtKind::ImportDecl => true,
                StmtKind::ClassDecl => self.model.classes.iter().any(|k| k.decl == g.statement && k.top_level),
                _ => false,
            };
            if top {
                out.insert(g.statement);
            }
        }
        for &s in c {
            let mut k = self.enclosing_class(s);
            while let Some(cl) = k {
                out.insert(self.model.class(cl).decl);
                k = self.model.class(cl).outer;
            }
        }
        self.slice(SliceKind::Declaration, out, BTreeSet::new())
    }

    /// Undirected edge distance from `s`; unreachable statements are absent.
    fn distances(&self, s: StmtId) -> BTreeMap<StmtId, usize> {
        let mut d = BTreeMap::from([(s, 0)]);
        let mut q = VecDeque::from([s]);
        while let Some(n) = q.pop_front() {
            let dn = d[&n];
            let node = NodeRef::Stmt(n);
            for &i in self.adj.outgoing(node).iter().chain(self.adj.incoming(node)) {
                let e = &self.g.edges[i];
                let m = if e.src == node { e.dst } else { e.src };
                if let Some(m) = m.stmt() {
                    if let std::collections::btree_map::Entry::Vacant(v) = d.entry(m) {
                        v.insert(dn + 1);
                        q.push_back(m);
                    }
                }
            }
        }
        d
    }

    fn render(&self, stmts: &[StmtId]) -> (LineSet, String) {
        let ls = line_set(self.model, &self.index, stmts.iter().copied());
        let r = render_lines(self.model, &ls);
        (ls, r)
    }

    /// Drops statements farthest from `s` until the rendering fits. The
    /// invocation, its file's declarations and its direct neighbours stay.
    fn fit_budget(&self, s: StmtId, all: &[StmtId], declaration: &[StmtId], tok: &dyn Tokenizer) -> (Vec<StmtId>, Vec<StmtId>) {
        let budget = self.config.token_budget;
        if tok.count(&self.render(all).1) <= budget {
            return (all.to_vec(), Vec::new());
        }
        let file = self.model.stmt(s).file;
        let mut keep: BTreeSet<StmtId> = declaration.iter().copied().filter(|d| self.model.stmt(*d).file == file).collect();
        keep.insert(s);
        let node = NodeRef::Stmt(s);
        for &i in self.adj.outgoing(node).iter().chain(self.adj.incoming(node)) {
            let e = &self.g.edges[i];
            keep.extend([e.src.stmt(), e.dst.stmt()].into_iter().flatten());
        }
        let dist = self.distances(s);
        let pos: BTreeMap<StmtId, usize> = all.iter().enumerate().map(|(i, x)| (*x, i)).collect();
        let mut droppable: Vec<StmtId> = all.iter().copied().filter(|x| !keep.contains(x)).collect();
        droppable.sort_by_key(|x| (std::cmp::Reverse(dist.get(x).copied().unwrap_or(usize::MAX)), std::cmp::Reverse(pos[x])));
        let with_dropped = |k: usize| -> Vec<StmtId> {
            let gone: BTreeSet<StmtId> = droppable[..k].iter().copied().collect();
            all.iter().copied().filter(|x| !gone.contains(x)).collect()
        };
        let fits = |k: usize| tok.count(&self.render(&with_dropped(k)).1) <= budget;
        let (mut lo, mut hi) = (0, droppable.len());
        if !fits(hi) {
            lo = hi;
        } else {
            while lo < hi {
                let mid = (lo + hi) / 2;
                if fits(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
        }
        (with_dropped(lo), droppable[..lo].to_vec())
    }

    pub fn holistic_context(&self, inv: &SensitiveInvocation) -> HolisticContext {
        self.holistic_context_with(inv, &CharRatioTokenizer)
    }

    pub fn holistic_context_with(&self, inv: &SensitiveInvocation, tok: &dyn Tokenizer) -> HolisticContext {
        let s = inv.statement;
        let (data, control) = self.explicit_context(s);
        let explicit = self.order(data.statements.iter().chain(&control.statements).copied());
        let usage = self.usage_context(&explicit);
        let e_use: Vec<StmtId> = self.order(explicit.iter().chain(&usage.statements).copied());
        let definition = self.definition_context(&e_use);
        let related: Vec<StmtId> = self.order(e_use.iter().chain(&definition.statements).copied());
        let declaration = self.declaration_context(&related);
        let implicit = self.order(usage.statements.iter().chain(&definition.statements).chain(&declaration.statements).copied());
        let full = self.order(explicit.iter().chain(&implicit).copied());
        let (all, dropped) = self.fit_budget(s, &full, &declaration.statements, tok);
        let (ls, rendered) = self.render(&all);
        let mut notes: BTreeSet<String> = [&data, &control, &usage, &definition, &declaration].iter().flat_map(|x| x.boundary_notes.iter().cloned()).collect();
        let tokens = tok.count(&rendered);
        if !dropped.is_empty() {
            notes.insert(format!("{} statements dropped to fit {} tokens", dropped.len(), self.config.token_budget));
        }
        if tokens > self.config.token_budget {
            notes.insert(format!("context still exceeds {} tokens after dropping", self.config.token_budget));
        }
        HolisticContext {
            invocation: inv.clone(),
            data,
            control,
            usage,
            definition,
            declaration,
            explicit,
            implicit,
            all,
            lines: line_ranges(self.model, &ls),
            rendered,
            tokens,
            dropped,
            notes: notes.into_iter().collect(),
        }
    }

    /// Line set of a statement set with gap closure.
    pub fn lines_of(&self, stmts: &[StmtId]) -> BTreeMap<String, Vec<(u32, u32)>> {
        line_ranges(self.model, &line_set(self.model, &self.index, stmts.iter().copied()))
    }
}
