//! Lowers parsed compilation units into statement nodes.
//!
//! Def/use extraction is syntactic. Names resolve against, in order, the
//! enclosing local scopes, the fields visible from the enclosing classes,
//! and a type-name heuristic (capitalized and mixed case) for names that are
//! neither. A leading `this.` is dropped, so an instance field is the same
//! variable whether written `x` or `this.x`.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{self, ClassAst, ClassKind, Expr, ExprKind, Lit, Member, MethodAst, Stmt, StmtKind as AstKind, TypeRef};
use super::model::*;

/// Repository-wide facts gathered from all syntax trees before lowering.
#[derive(Debug, Default)]
pub struct Index {
    classes: BTreeMap<String, IndexClass>,
}

#[derive(Debug, Default)]
struct IndexClass {
    fields: BTreeMap<String, String>,
    methods: BTreeMap<String, String>,
    supers: Vec<String>,
}

impl Index {
    pub fn build<'a>(units: impl IntoIterator<Item = &'a ast::CompilationUnit>) -> Index {
        let mut idx = Index::default();
        for cu in units {
            for c in &cu.classes {
                idx.add_class(c);
            }
        }
        idx
    }

    fn add_class(&mut self, c: &ClassAst) {
        let mut ic = IndexClass { supers: c.extends.iter().chain(&c.implements).map(|t| t.simple().to_string()).collect(), ..IndexClass::default() };
        for m in &c.members {
            match m {
                Member::Field(f) => {
                    for v in &f.vars {
                        ic.fields.entry(v.name.clone()).or_insert_with(|| f.ty.simple().to_string());
                    }
                }
                Member::Method(m) => {
                    if let Some(r) = &m.ret {
                        ic.methods.entry(m.name.clone()).or_insert_with(|| r.simple().to_string());
                    }
                }
                Member::Class(inner) => self.add_class(inner),
                Member::Init { .. } => {}
            }
        }
        self.classes.entry(c.name.clone()).or_insert(ic);
    }

    pub fn is_class(&self, simple: &str) -> bool {
        self.classes.contains_key(simple)
    }

    fn lookup<T>(&self, class: &str, get: impl Fn(&IndexClass) -> Option<T>) -> Option<T> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![class.rsplit('.').next().unwrap_or(class).to_string()];
        while let Some(c) = stack.pop() {
            if !seen.insert(c.clone()) {
                continue;
            }
            if let Some(ic) = self.classes.get(&c) {
                if let Some(v) = get(ic) {
                    return Some(v);
                }
                stack.extend(ic.supers.iter().rev().cloned());
            }
        }
        None
    }

    pub fn field_type(&self, class: &str, field: &str) -> Option<String> {
        self.lookup(class, |ic| ic.fields.get(field).cloned())
    }

    pub fn has_field(&self, class: &str, field: &str) -> bool {
        self.field_type(class, field).is_some()
    }

    pub fn method_ret(&self, class: &str, method: &str) -> Option<String> {
        self.lookup(class, |ic| ic.methods.get(method).cloned())
    }
}

fn is_type_like(n: &str) -> bool {
    n.chars().next().is_some_and(|c| c.is_ascii_uppercase()) && n.chars().any(|c| c.is_ascii_lowercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NameClass {
    Local,
    Field,
    Type,
    Unknown,
}

/// A variable access path such as `a`, `a.b` or `Type.F`, with every
/// variable prefix that reading it touches.
#[derive(Debug, Clone)]
struct VarPath {
    full: String,
    prefixes: Vec<String>,
}

#[derive(Debug, Default)]
struct StmtBuilder {
    defs: BTreeSet<String>,
    uses: BTreeSet<String>,
    flows: Vec<Flow>,
    calls: Vec<CallSite>,
    use_sites: Vec<UseSite>,
    arg_ctx: Option<(usize, usize)>,
}

impl StmtBuilder {
    fn read(&mut self, v: &str) {
        self.uses.insert(v.to_string());
        self.use_sites.push(UseSite { var: v.to_string(), arg: self.arg_ctx });
    }

    fn read_path(&mut self, p: &VarPath) -> Vec<Src> {
        for v in &p.prefixes {
            self.read(v);
        }
        p.prefixes.iter().rev().map(|v| Src::Var(v.clone())).collect()
    }
}

struct ClassCtx {
    id: ClassId,
    simple: String,
    qualified: String,
    fields: BTreeSet<String>,
    supers: Vec<String>,
    anon_counter: u32,
}

struct FnCtx {
    id: FuncId,
    scopes: Vec<BTreeMap<String, String>>,
    var_types: BTreeMap<String, String>,
    reference_vars: BTreeSet<String>,
    body: Vec<StmtId>,
}

pub struct Lowerer<'a> {
    index: &'a Index,
    pub model: RepoModel,
    file: FileId,
    src: String,
    package: Option<String>,
    classes: Vec<ClassCtx>,
    fns: Vec<FnCtx>,
}

impl<'a> Lowerer<'a> {
    pub fn new(index: &'a Index) -> Lowerer<'a> {
        Lowerer { index, model: RepoModel::default(), file: FileId(0), src: String::new(), package: None, classes: Vec::new(), fns: Vec::new() }
    }

    pub fn lower_file(&mut self, path: String, text: String, cu: &ast::CompilationUnit) {
        let fid = FileId(self.model.files.len() as u32);
        let mut sf = SourceFile::new(fid, path, text.clone());
        sf.package = cu.package.as_ref().map(|(n, _)| n.clone());
        sf.imports = cu.imports.iter().map(|i| i.path.clone()).collect();
        self.model.files.push(sf);
        self.file = fid;
        self.src = text;
        self.package = cu.package.as_ref().map(|(n, _)| n.clone());
        if let Some((_, span)) = &cu.package {
            let id = self.push_stmt(StmtKind::PackageDecl, *span, Owner::Global, StmtBuilder::default());
            self.model.globals.push(GlobalDecl { statement: id, kind: StmtKind::PackageDecl, variable: None, rhs_uses: BTreeSet::new(), class: None, is_static: false });
        }
        for imp in &cu.imports {
            let id = self.push_stmt(StmtKind::ImportDecl, imp.span, Owner::Global, StmtBuilder::default());
            self.model.globals.push(GlobalDecl { statement: id, kind: StmtKind::ImportDecl, variable: None, rhs_uses: BTreeSet::new(), class: None, is_static: false });
        }
        for c in &cu.classes {
            self.lower_class(c, true);
        }
    }

    fn text_of(&self, span: ast::Span) -> String {
        self.src[span.lo..span.hi].to_string()
    }

    fn push_stmt(&mut self, kind: StmtKind, span: ast::Span, owner: Owner, sb: StmtBuilder) -> StmtId {
        let id = StmtId(self.model.statements.len() as u32);
        self.model.statements.push(StatementNode {
            id,
            file: self.file,
            line_span: LineSpan { start: span.line, end: span.end_line },
            kind,
            text: self.text_of(span),
            owner,
            defs: sb.defs,
            uses: sb.uses,
            flows: sb.flows,
            calls: sb.calls,
            use_sites: sb.use_sites,
            byte_span: (span.lo, span.hi),
        });
        if let Owner::Function(_) = owner {
            if let Some(f) = self.fns.last_mut() {
                f.body.push(id);
            }
        }
        id
    }

    fn lower_class(&mut self, c: &ClassAst, top_level: bool) -> ClassId {
        let id = ClassId(self.model.classes.len() as u32);
        let (simple, qualified) = if c.anonymous {
            let outer = self.classes.last_mut().expect("anonymous class outside a class");
            outer.anon_counter += 1;
            let q = format!("{}${}", outer.qualified, outer.anon_counter);
            (q.rsplit('.').next().unwrap_or(&q).to_string(), q)
        } else if let Some(outer) = self.classes.last() {
            let q = if self.fns.is_empty() { format!("{}.{}", outer.qualified, c.name) } else { format!("{}${}", outer.qualified, c.name) };
            (c.name.clone(), q)
        } else {
            let q = match &self.package {
                Some(p) => format!("{p}.{}", c.name),
                None => c.name.clone(),
            };
            (c.name.clone(), q)
        };
        let decl = self.push_stmt(StmtKind::ClassDecl, c.header, Owner::Global, StmtBuilder::default());
        let supers_written: Vec<String> = c.extends.iter().chain(&c.implements).map(|t| t.name.clone()).collect();
        self.model.classes.push(ClassDecl {
            id,
            name: qualified.clone(),
            simple_name: simple.clone(),
            file: self.file,
            decl,
            is_interface: c.kind == ClassKind::Interface,
            is_abstract: c.modifiers.iter().any(|m| m == "abstract") || c.kind == ClassKind::Interface,
            top_level,
            outer: self.classes.last().map(|o| o.id),
            supertypes_written: supers_written.clone(),
            supertypes: Vec::new(),
            methods: Vec::new(),
            fields: Vec::new(),
            field_types: BTreeMap::new(),
        });
        self.model.globals.push(GlobalDecl { statement: decl, kind: StmtKind::ClassDecl, variable: None, rhs_uses: BTreeSet::new(), class: Some(id), is_static: false });

        let mut fields = BTreeSet::new();
        for m in &c.members {
            if let Member::Field(f) = m {
                for v in &f.vars {
                    fields.insert(v.name.clone());
                    self.model.classes[id.idx()].field_types.insert(v.name.clone(), f.ty.simple().to_string());
                }
            }
        }
        self.classes.push(ClassCtx {
            id,
            simple: if c.anonymous { c.extends[0].simple().to_string() } else { simple },
            qualified,
            fields,
            supers: supers_written.iter().map(|s| s.rsplit('.').next().unwrap_or(s).to_string()).collect(),
            anon_counter: 0,
        });
        let is_interface = c.kind == ClassKind::Interface;
        for m in &c.members {
            match m {
                Member::Field(f) => self.lower_field(f, id, is_interface),
                Member::Method(mm) => {
                    let fid = self.lower_method(mm, id);
                    self.model.classes[id.idx()].methods.push(fid);
                }
                Member::Class(inner) => {
                    self.lower_class(inner, false);
                }
                Member::Init { is_static, body, span } => {
                    let fid = self.lower_initializer(*is_static, body, *span, id);
                    self.model.classes[id.idx()].methods.push(fid);
                }
            }
        }
        self.classes.pop();
        id
    }

    fn lower_field(&mut self, f: &ast::FieldAst, class: ClassId, in_interface: bool) {
        let is_static = in_interface || f.modifiers.iter().any(|m| m == "static");
        let multi = f.vars.len() > 1;
        for v in &f.vars {
            let mut sb = StmtBuilder::default();
            let sources = match &v.init {
                Some(e) => self.expr(&mut sb, e),
                None => Vec::new(),
            };
            sb.defs.insert(v.name.clone());
            sb.flows.push(Flow { target: v.name.clone(), sources, copy_of: None, fresh: v.init.as_ref().is_some_and(|e| matches!(e.kind, ExprKind::New { .. })) });
            let rhs_uses = sb.uses.clone();
            let span = if multi { v.span } else { f.span };
            let id = self.push_stmt(StmtKind::GlobalDef, span, Owner::Global, sb);
            let gi = self.model.globals.len();
            self.model.globals.push(GlobalDecl { statement: id, kind: StmtKind::GlobalDef, variable: Some(v.name.clone()), rhs_uses, class: Some(class), is_static });
            self.model.classes[class.idx()].fields.push(gi);
        }
    }

    fn begin_fn(&mut self) -> FuncId {
        let id = FuncId(self.model.functions.len() as u32);
        // Reserve the slot so functions nested in this body get later ids.
        self.model.functions.push(placeholder_fn());
        self.fns.push(FnCtx { id, scopes: vec![BTreeMap::new()], var_types: BTreeMap::new(), reference_vars: BTreeSet::new(), body: Vec::new() });
        id
    }

    fn declare(&mut self, name: &str, ty: &TypeRef) {
        if let Some(f) = self.fns.last_mut() {
            let t = ty.simple().to_string();
            f.scopes.last_mut().expect("scope").insert(name.to_string(), t.clone());
            f.var_types.insert(name.to_string(), t);
            if ty.is_reference() {
                f.reference_vars.insert(name.to_string());
            } else {
                f.reference_vars.remove(name);
            }
        }
    }

    fn lower_method(&mut self, m: &MethodAst, class: ClassId) -> FuncId {
        let id = self.begin_fn();
        for p in &m.params {
            self.declare(&p.name, &p.ty);
        }
        let mut entry_sb = StmtBuilder::default();
        for p in &m.params {
            entry_sb.defs.insert(p.name.clone());
        }
        let entry = self.push_stmt(StmtKind::Entry, m.sig, Owner::Function(id), entry_sb);
        let (tree, exit_span) = match &m.body {
            Some(b) => (self.lower_block(&b.stmts), b.close),
            None => (Block::Seq(Vec::new()), m.sig),
        };
        let exit = self.push_stmt(StmtKind::Exit, exit_span, Owner::Function(id), StmtBuilder::default());
        let is_abstract = m.body.is_none();
        let is_static = m.modifiers.iter().any(|x| x == "static");
        let class_name = self.model.classes[class.idx()].name.clone();
        let ret = if m.is_ctor { "void".to_string() } else { m.ret.as_ref().map(|r| r.render()).unwrap_or_default() };
        let signature = Signature { class: class_name, name: m.name.clone(), param_types: m.params.iter().map(|p| p.ty.render()).collect(), ret };
        self.finish_fn(id, class, m.name.clone(), signature, m.params.iter().map(|p| p.name.clone()).collect(), entry, exit, tree, is_static, is_abstract, m.is_ctor, false);
        id
    }

    fn lower_initializer(&mut self, is_static: bool, body: &ast::Body, span: ast::Span, class: ClassId) -> FuncId {
        let id = self.begin_fn();
        let head = ast::Span { lo: span.lo, hi: body.open.hi, line: span.line, end_line: body.open.end_line };
        let entry = self.push_stmt(StmtKind::Entry, head, Owner::Function(id), StmtBuilder::default());
        let tree = self.lower_block(&body.stmts);
        let exit = self.push_stmt(StmtKind::Exit, body.close, Owner::Function(id), StmtBuilder::default());
        let name = if is_static { "<clinit>" } else { "<init-block>" }.to_string();
        let class_name = self.model.classes[class.idx()].name.clone();
        let signature = Signature { class: class_name, name: name.clone(), param_types: Vec::new(), ret: "void".into() };
        self.finish_fn(id, class, name, signature, Vec::new(), entry, exit, tree, is_static, false, false, true);
        id
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_fn(
        &mut self,
        id: FuncId,
        class: ClassId,
        name: String,
        signature: Signature,
        params: Vec<String>,
        entry: StmtId,
        exit: StmtId,
        tree: Block,
        is_static: bool,
        is_abstract: bool,
        is_ctor: bool,
        is_initializer: bool,
    ) {
        let ctx = self.fns.pop().expect("function context");
        let mut body: Vec<StmtId> = ctx.body.into_iter().filter(|s| *s != entry && *s != exit).collect();
        let stmts = &self.model.statements;
        body.sort_by_key(|s| (stmts[s.idx()].byte_span.0, s.0));
        let f = FunctionDecl {
            id,
            class,
            name,
            signature,
            params,
            body,
            entry,
            exit,
            return_var: RETURN_VAR.to_string(),
            is_static,
            is_abstract,
            is_ctor,
            is_initializer,
            tree,
            var_types: ctx.var_types,
            reference_vars: ctx.reference_vars,
        };
        self.model.functions[id.idx()] = f;
    }

    // ---- statements ----

    fn owner(&self) -> Owner {
        Owner::Function(self.fns.last().expect("function").id)
    }

    fn lower_block(&mut self, stmts: &[Stmt]) -> Block {
        self.fns.last_mut().expect("function").scopes.push(BTreeMap::new());
        let items: Vec<Block> = stmts.iter().map(|s| self.lower_stmt(s)).collect();
        self.fns.last_mut().expect("function").scopes.pop();
        Block::Seq(items)
    }

    fn simple_stmt(&mut self, kind: StmtKind, span: ast::Span, sb: StmtBuilder) -> StmtId {
        let owner = self.owner();
        self.push_stmt(kind, span, owner, sb)
    }

    fn cond_stmt(&mut self, e: &Expr, span: ast::Span) -> StmtId {
        let mut sb = StmtBuilder::default();
        self.expr(&mut sb, e);
        self.simple_stmt(StmtKind::Condition, span, sb)
    }

    fn expr_stmt_kind(e: &Expr) -> StmtKind {
        match &e.kind {
            ExprKind::Call { .. } | ExprKind::New { .. } | ExprKind::CtorCall { .. } => StmtKind::Call,
            _ => StmtKind::Assignment,
        }
    }

    fn lower_local(&mut self, ty: &TypeRef, vars: &[ast::VarDecl], span: ast::Span) -> StmtId {
        let mut sb = StmtBuilder::default();
        for v in vars {
            let vty = TypeRef { name: ty.name.clone(), dims: ty.dims + v.dims };
            if let Some(init) = &v.init {
                let sources = self.expr(&mut sb, init);
                let copy_of = self.copy_source(init);
                let fresh = matches!(init.kind, ExprKind::New { .. } | ExprKind::NewArray { .. } | ExprKind::ArrayLit(_));
                sb.defs.insert(v.name.clone());
                sb.flows.push(Flow { target: v.name.clone(), sources, copy_of, fresh });
            }
            self.declare(&v.name, &vty);
        }
        self.simple_stmt(StmtKind::Declaration, span, sb)
    }

    fn lower_stmt(&mut self, s: &Stmt) -> Block {
        match &s.kind {
            AstKind::Local { ty, vars } => Block::Simple(self.lower_local(ty, vars, s.span)),
            AstKind::Expr(e) => {
                let mut sb = StmtBuilder::default();
                self.expr(&mut sb, e);
                Block::Simple(self.simple_stmt(Self::expr_stmt_kind(e), s.span, sb))
            }
            AstKind::Return(e) => {
                let mut sb = StmtBuilder::default();
                if let Some(e) = e {
                    let sources = self.expr(&mut sb, e);
                    let copy_of = self.copy_source(e);
                    sb.flows.push(Flow { target: RETURN_VAR.to_string(), sources, copy_of, fresh: false });
                }
                Block::Return(self.simple_stmt(StmtKind::Return, s.span, sb))
            }
            AstKind::Throw(e) => {
                let mut sb = StmtBuilder::default();
                self.expr(&mut sb, e);
                Block::Throw(self.simple_stmt(StmtKind::Jump, s.span, sb))
            }
            AstKind::If { cond, header, then, els } => {
                let c = self.cond_stmt(cond, *header);
                let then = Box::new(self.lower_scoped(then));
                let els = els.as_ref().map(|e| Box::new(self.lower_scoped(e)));
                Block::If { cond: c, then, els }
            }
            AstKind::While { cond, header, body } => {
                let c = self.cond_stmt(cond, *header);
                Block::While { cond: c, body: Box::new(self.lower_scoped(body)) }
            }
            AstKind::DoWhile { body, cond, header } => {
                let b = Box::new(self.lower_scoped(body));
                let c = self.cond_stmt(cond, *header);
                Block::DoWhile { body: b, cond: c }
            }
            AstKind::For { init, cond, update, body } => {
                self.fns.last_mut().expect("function").scopes.push(BTreeMap::new());
                let mut init_ids = Vec::new();
                for i in init {
                    match &i.kind {
                        AstKind::Local { ty, vars } => init_ids.push(self.lower_local(ty, vars, i.span)),
                        AstKind::Expr(e) => {
                            let mut sb = StmtBuilder::default();
                            self.expr(&mut sb, e);
                            init_ids.push(self.simple_stmt(Self::expr_stmt_kind(e), i.span, sb));
                        }
                        _ => {}
                    }
                }
                let c = cond.as_ref().map(|c| self.cond_stmt(c, c.span));
                let b = Box::new(self.lower_scoped(body));
                let mut ups = Vec::new();
                for u in update {
                    let mut sb = StmtBuilder::default();
                    self.expr(&mut sb, u);
                    ups.push(self.simple_stmt(Self::expr_stmt_kind(u), u.span, sb));
                }
                self.fns.last_mut().expect("function").scopes.pop();
                Block::For { init: init_ids, cond: c, update: ups, body: b }
            }
            AstKind::ForEach { ty, name, iter, header, body } => {
                self.fns.last_mut().expect("function").scopes.push(BTreeMap::new());
                let mut sb = StmtBuilder::default();
                let sources = self.expr(&mut sb, iter);
                self.declare(name, ty);
                sb.defs.insert(name.clone());
                sb.flows.push(Flow { target: name.clone(), sources, copy_of: None, fresh: false });
                let h = self.simple_stmt(StmtKind::LoopHeader, *header, sb);
                let b = Box::new(self.lower_scoped(body));
                self.fns.last_mut().expect("function").scopes.pop();
                Block::ForEach { header: h, body: b }
            }
            AstKind::Switch { sel, header, groups } => {
                let selector = self.cond_stmt(sel, *header);
                self.fns.last_mut().expect("function").scopes.push(BTreeMap::new());
                let has_default = groups.iter().any(|g| g.labels.iter().any(|l| l.is_none()));
                let gs = groups.iter().map(|g| Block::Seq(g.body.iter().map(|s| self.lower_stmt(s)).collect())).collect();
                self.fns.last_mut().expect("function").scopes.pop();
                Block::Switch { selector, groups: gs, has_default }
            }
            AstKind::Labeled { label, label_span, body } => {
                let l = self.simple_stmt(StmtKind::Label, *label_span, StmtBuilder::default());
                Block::Labeled { label: l, name: label.clone(), body: Box::new(self.lower_stmt(body)) }
            }
            AstKind::Break(label) => Block::Break { stmt: self.simple_stmt(StmtKind::Jump, s.span, StmtBuilder::default()), label: label.clone() },
            AstKind::Continue(label) => Block::Continue { stmt: self.simple_stmt(StmtKind::Jump, s.span, StmtBuilder::default()), label: label.clone() },
            AstKind::Block(stmts) => self.lower_block(stmts),
            AstKind::Try { resources, body, catches, finally } => {
                self.fns.last_mut().expect("function").scopes.push(BTreeMap::new());
                let mut items = Vec::new();
                for r in resources {
                    items.push(self.lower_stmt(r));
                }
                items.push(self.lower_block(body));
                self.fns.last_mut().expect("function").scopes.pop();
                let cs = catches
                    .iter()
                    .map(|c| {
                        self.fns.last_mut().expect("function").scopes.push(BTreeMap::new());
                        self.declare(&c.name, &c.ty);
                        let b = self.lower_block(&c.body);
                        self.fns.last_mut().expect("function").scopes.pop();
                        b
                    })
                    .collect();
                let fin = finally.as_ref().map(|f| Box::new(self.lower_block(f)));
                Block::Try { body: Box::new(Block::Seq(items)), catches: cs, finally: fin }
            }
            AstKind::Sync { body, .. } => self.lower_block(body),
            AstKind::Assert { cond, msg } => {
                let mut sb = StmtBuilder::default();
                self.expr(&mut sb, cond);
                if let Some(m) = msg {
                    self.expr(&mut sb, m);
                }
                Block::Simple(self.simple_stmt(StmtKind::Condition, s.span, sb))
            }
            AstKind::LocalClass(c) => {
                self.lower_class(c, false);
                Block::Seq(Vec::new())
            }
            AstKind::Empty => Block::Seq(Vec::new()),
        }
    }

    fn lower_scoped(&mut self, s: &Stmt) -> Block {
        self.fns.last_mut().expect("function").scopes.push(BTreeMap::new());
        let b = self.lower_stmt(s);
        self.fns.last_mut().expect("function").scopes.pop();
        b
    }

    // ---- names ----

    fn local_type(&self, n: &str) -> Option<&String> {
        for f in self.fns.iter().rev() {
            for sc in f.scopes.iter().rev() {
                if let Some(t) = sc.get(n) {
                    return Some(t);
                }
            }
        }
        None
    }

    fn field_owner_type(&self, n: &str) -> Option<String> {
        for c in self.classes.iter().rev() {
            if c.fields.contains(n) {
                return self.model.classes[c.id.idx()].field_types.get(n).cloned();
            }
            for s in &c.supers {
                if let Some(t) = self.index.field_type(s, n) {
                    return Some(t);
                }
            }
        }
        None
    }

    fn classify(&self, n: &str) -> NameClass {
        if self.local_type(n).is_some() {
            NameClass::Local
        } else if self.field_owner_type(n).is_some() {
            NameClass::Field
        } else if self.index.is_class(n) || is_type_like(n) {
            NameClass::Type
        } else {
            NameClass::Unknown
        }
    }

    fn var_type(&self, n: &str) -> Option<String> {
        self.local_type(n).cloned().or_else(|| self.field_owner_type(n))
    }

    /// Splits a pure name/field chain into segments; `this.`/`super.` roots are dropped.
    fn segments(e: &Expr) -> Option<(bool, Vec<String>)> {
        match &e.kind {
            ExprKind::Name(n) => Some((false, vec![n.clone()])),
            ExprKind::Field(b, f) => match &b.kind {
                ExprKind::This | ExprKind::Super => Some((true, vec![f.clone()])),
                _ => {
                    let (rooted_this, mut segs) = Self::segments(b)?;
                    segs.push(f.clone());
                    Some((rooted_this, segs))
                }
            },
            _ => None,
        }
    }

    /// Interprets a name chain as a variable path, a type name, or neither.
    fn chain(&self, e: &Expr) -> Chain {
        let Some((rooted_this, segs)) = Self::segments(e) else { return Chain::Other };
        if rooted_this {
            return Chain::Var(path_of(&segs, 0));
        }
        match self.classify(&segs[0]) {
            NameClass::Local | NameClass::Field => Chain::Var(path_of(&segs, 0)),
            NameClass::Type => self.type_rooted(&segs, 0),
            NameClass::Unknown => match segs.iter().skip(1).position(|s| is_type_like(s)) {
                Some(k) => self.type_rooted(&segs, k + 1),
                None => Chain::Var(path_of(&segs, 0)),
            },
        }
    }

    fn type_rooted(&self, segs: &[String], type_at: usize) -> Chain {
        let ty = segs[..=type_at].join(".");
        if segs.len() == type_at + 1 {
            return Chain::Type(ty);
        }
        if self.index.is_class(&segs[type_at]) {
            let mut full = ty;
            let mut prefixes = Vec::new();
            for s in &segs[type_at + 1..] {
                full = format!("{full}.{s}");
                prefixes.push(full.clone());
            }
            Chain::Var(VarPath { full, prefixes })
        } else {
            Chain::External
        }
    }

    fn copy_source(&self, e: &Expr) -> Option<String> {
        match &e.kind {
            ExprKind::Name(n) if self.classify(n) == NameClass::Local => Some(n.clone()),
            _ => None,
        }
    }

    fn current_class_simple(&self) -> Option<String> {
        self.classes.last().map(|c| c.simple.clone())
    }

    /// Best-effort static type of an expression, as a simple or dotted name.
    fn expr_type(&self, e: &Expr) -> Option<String> {
        match &e.kind {
            ExprKind::Name(_) | ExprKind::Field(..) => match self.chain(e) {
                Chain::Var(p) => {
                    let parts: Vec<&str> = p.full.split('.').collect();
                    let (mut ty, rest) = if self.index.is_class(parts[0]) && self.classify(parts[0]) == NameClass::Type {
                        (self.index.field_type(parts[0], parts.get(1)?)?, &parts[2..])
                    } else {
                        (self.var_type(parts[0])?, &parts[1..])
                    };
                    for f in rest {
                        ty = self.index.field_type(&ty, f)?;
                    }
                    Some(ty)
                }
                _ => None,
            },
            ExprKind::This => self.current_class_simple(),
            ExprKind::Super => self.classes.last().and_then(|c| c.supers.first().cloned()),
            ExprKind::Call { recv, name, .. } => {
                let owner = match recv {
                    None => self.current_class_simple()?,
                    Some(r) => match self.chain(r) {
                        Chain::Type(t) => t,
                        _ => self.expr_type(r)?,
                    },
                };
                self.index.method_ret(&owner, name)
            }
            ExprKind::New { ty, .. } => Some(ty.name.clone()),
            ExprKind::Cast { ty, .. } => Some(ty.name.clone()),
            ExprKind::Lit(Lit::Str(_)) => Some("String".into()),
            ExprKind::Cond { then, .. } => self.expr_type(then),
            _ => None,
        }
    }

    // ---- expressions ----

    /// Records reads, defs, flows and call sites of `e`; returns the value sources.
    fn expr(&mut self, sb: &mut StmtBuilder, e: &Expr) -> Vec<Src> {
        match &e.kind {
            ExprKind::Name(_) | ExprKind::Field(..) => match self.chain(e) {
                Chain::Var(p) => sb.read_path(&p),
                Chain::Type(_) | Chain::External => Vec::new(),
                Chain::Other => match &e.kind {
                    ExprKind::Field(b, _) => self.expr(sb, b),
                    _ => Vec::new(),
                },
            },
            ExprKind::This | ExprKind::Super | ExprKind::Lit(_) | ExprKind::ClassLit(_) => Vec::new(),
            ExprKind::Call { recv, name, args } => {
                let (receiver, recv_sources) = match recv {
                    None => (Receiver::Implicit, Vec::new()),
                    Some(r) => match &r.kind {
                        ExprKind::This => (Receiver::This, Vec::new()),
                        ExprKind::Super => (Receiver::Super, Vec::new()),
                        _ => match self.chain(r) {
                            Chain::Type(t) => (Receiver::Static(t), Vec::new()),
                            _ => {
                                let ty = self.expr_type(r);
                                let srcs = self.expr(sb, r);
                                (Receiver::Value(ty), srcs)
                            }
                        },
                    },
                };
                self.call(sb, e, name.clone(), CallKind::Method, receiver, recv_sources, args)
            }
            ExprKind::CtorCall { is_super, args } => {
                let receiver = if *is_super { Receiver::Super } else { Receiver::This };
                let name = if *is_super {
                    self.classes.last().and_then(|c| c.supers.first().cloned()).unwrap_or_default()
                } else {
                    self.current_class_simple().unwrap_or_default()
                };
                self.call(sb, e, name, CallKind::Delegating, receiver, Vec::new(), args)
            }
            ExprKind::New { ty, args, body } => {
                let srcs = self.call(sb, e, ty.simple().to_string(), CallKind::Constructor, Receiver::Static(ty.name.clone()), Vec::new(), args);
                if let Some(b) = body {
                    self.lower_class(b, false);
                }
                srcs
            }
            ExprKind::NewArray { dims, init, .. } => {
                let mut out = Vec::new();
                for d in dims {
                    out.extend(self.expr(sb, d));
                }
                for i in init.iter().flatten() {
                    out.extend(self.expr(sb, i));
                }
                out
            }
            ExprKind::ArrayLit(items) => items.iter().flat_map(|i| self.expr(sb, i)).collect(),
            ExprKind::Index(a, i) => {
                let mut out = self.expr(sb, a);
                out.extend(self.expr(sb, i));
                out
            }
            ExprKind::Unary { op, expr, .. } if op == "++" || op == "--" => self.update(sb, expr, "+=", Vec::new(), None),
            ExprKind::Unary { expr, .. } => self.expr(sb, expr),
            ExprKind::Binary { lhs, rhs, .. } => {
                let mut out = self.expr(sb, lhs);
                out.extend(self.expr(sb, rhs));
                out
            }
            ExprKind::Assign { op, lhs, rhs } => {
                let rhs_src = self.expr(sb, rhs);
                let copy = if op == "=" { self.copy_source(rhs) } else { None };
                let fresh = op == "=" && matches!(rhs.kind, ExprKind::New { .. } | ExprKind::NewArray { .. } | ExprKind::ArrayLit(_));
                let r = self.update(sb, lhs, op, rhs_src.clone(), copy);
                if fresh {
                    if let Some(f) = sb.flows.last_mut() {
                        f.fresh = true;
                    }
                }
                if op == "=" {
                    rhs_src
                } else {
                    r
                }
            }
            ExprKind::Cond { cond, then, els } => {
                let mut out = self.expr(sb, cond);
                out.extend(self.expr(sb, then));
                out.extend(self.expr(sb, els));
                out
            }
            ExprKind::Cast { expr, .. } | ExprKind::InstanceOf { expr, .. } => self.expr(sb, expr),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn call(&mut self, sb: &mut StmtBuilder, e: &Expr, name: String, kind: CallKind, receiver: Receiver, recv_sources: Vec<Src>, args: &[Expr]) -> Vec<Src> {
        let idx = sb.calls.len();
        sb.calls.push(CallSite { name, kind, receiver, recv_sources, args: Vec::new(), text: self.text_of(e.span), parent: sb.arg_ctx });
        let saved = sb.arg_ctx;
        let mut arg_srcs = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            sb.arg_ctx = Some((idx, i));
            arg_srcs.push(self.expr(sb, a));
        }
        sb.arg_ctx = saved;
        sb.calls[idx].args = arg_srcs;
        vec![Src::Call(idx)]
    }

    /// Assignment-like update of `lhs`. `op` is `=` for plain stores.
    fn update(&mut self, sb: &mut StmtBuilder, lhs: &Expr, op: &str, rhs: Vec<Src>, copy_of: Option<String>) -> Vec<Src> {
        match &lhs.kind {
            ExprKind::Index(base, i) => {
                let mut sources = Vec::new();
                let target = match self.chain(base) {
                    Chain::Var(p) => {
                        sources.extend(sb.read_path(&p));
                        Some(p.full)
                    }
                    _ => {
                        sources.extend(self.expr(sb, base));
                        None
                    }
                };
                sources.extend(self.expr(sb, i));
                sources.extend(rhs);
                match target {
                    Some(t) => {
                        sb.defs.insert(t.clone());
                        sb.flows.push(Flow { target: t.clone(), sources, copy_of: None, fresh: false });
                        vec![Src::Var(t)]
                    }
                    None => sources,
                }
            }
            _ => match self.chain(lhs) {
                Chain::Var(p) => {
                    let mut sources = Vec::new();
                    if op == "=" {
                        for v in &p.prefixes[..p.prefixes.len() - 1] {
                            sb.read(v);
                        }
                    } else {
                        sources.extend(sb.read_path(&p));
                    }
                    sources.extend(rhs);
                    sb.defs.insert(p.full.clone());
                    sb.flows.push(Flow { target: p.full.clone(), sources, copy_of, fresh: false });
                    vec![Src::Var(p.full)]
                }
                _ => {
                    let mut out = self.expr(sb, lhs);
                    out.extend(rhs);
                    out
                }
            },
        }
    }
}

enum Chain {
    Var(VarPath),
    Type(String),
    /// Static member of a type outside the repository.
    External,
    Other,
}

fn path_of(segs: &[String], from: usize) -> VarPath {
    let mut prefixes = Vec::new();
    let mut full = String::new();
    for s in &segs[from..] {
        if !full.is_empty() {
            full.push('.');
        }
        full.push_str(s);
        prefixes.push(full.clone());
    }
    VarPath { full, prefixes }
}

fn placeholder_fn() -> FunctionDecl {
    FunctionDecl {
        id: FuncId(u32::MAX),
        class: ClassId(0),
        name: String::new(),
        signature: Signature { class: String::new(), name: String::new(), param_types: Vec::new(), ret: String::new() },
        params: Vec::new(),
        body: Vec::new(),
        entry: StmtId(0),
        exit: StmtId(0),
        return_var: RETURN_VAR.to_string(),
        is_static: false,
        is_abstract: false,
        is_ctor: false,
        is_initializer: false,
        tree: Block::Seq(Vec::new()),
        var_types: BTreeMap::new(),
        reference_vars: BTreeSet::new(),
    }
}
