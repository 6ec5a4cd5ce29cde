//! Statement-level repository model.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn idx(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(StmtId);
id_type!(FuncId);
id_type!(ClassId);
id_type!(FileId);

pub const RETURN_VAR: &str = "$ret";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtKind {
    Declaration,
    Assignment,
    Call,
    Return,
    Condition,
    LoopHeader,
    Jump,
    Label,
    Entry,
    Exit,
    GlobalDef,
    ImportDecl,
    PackageDecl,
    ClassDecl,
}

impl StmtKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StmtKind::Declaration => "declaration",
            StmtKind::Assignment => "assignment",
            StmtKind::Call => "call",
            StmtKind::Return => "return",
            StmtKind::Condition => "condition",
            StmtKind::LoopHeader => "loop_header",
            StmtKind::Jump => "jump",
            StmtKind::Label => "label",
            StmtKind::Entry => "entry",
            StmtKind::Exit => "exit",
            StmtKind::GlobalDef => "global_def",
            StmtKind::ImportDecl => "import_decl",
            StmtKind::PackageDecl => "package_decl",
            StmtKind::ClassDecl => "class_decl",
        }
    }

    /// Entry and exit nodes are scaffolding and never count as source lines.
    pub fn is_synthetic(self) -> bool {
        matches!(self, StmtKind::Entry | StmtKind::Exit)
    }

    pub fn is_global(self) -> bool {
        matches!(self, StmtKind::GlobalDef | StmtKind::ImportDecl | StmtKind::PackageDecl | StmtKind::ClassDecl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: u32,
    pub end: u32,
}

impl LineSpan {
    pub fn lines(self) -> impl Iterator<Item = u32> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Function(FuncId),
    Global,
}

/// One value source inside a statement: a variable read or the result of
/// a call site of the same statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Src {
    Var(String),
    Call(usize),
}

/// `target := f(sources)` in evaluation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub target: String,
    pub sources: Vec<Src>,
    /// Set when the right-hand side is a bare variable (`a = b`).
    pub copy_of: Option<String>,
    /// Set when the right-hand side is a `new` expression.
    pub fresh: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Method,
    Constructor,
    /// `this(...)` / `super(...)`
    Delegating,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    /// Unqualified call: the enclosing class (or an outer class).
    Implicit,
    This,
    Super,
    /// `Type.m(...)` on a type name.
    Static(String),
    /// An expression of (possibly unknown) declared type.
    Value(Option<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    /// Method name; for constructors the simple type name.
    pub name: String,
    pub kind: CallKind,
    pub receiver: Receiver,
    pub recv_sources: Vec<Src>,
    pub args: Vec<Vec<Src>>,
    /// Verbatim call expression.
    pub text: String,
    /// Innermost enclosing (call, argument) when this call is itself an argument.
    pub parent: Option<(usize, usize)>,
}

impl CallSite {
    /// `Type.name` when the receiver type is known, else just the name.
    pub fn display_name(&self) -> String {
        match &self.receiver {
            Receiver::Static(t) | Receiver::Value(Some(t)) => format!("{t}.{}", self.name),
            _ => self.name.clone(),
        }
    }
}

/// One occurrence of a variable read; `arg` binds it to the innermost
/// enclosing call argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseSite {
    pub var: String,
    pub arg: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementNode {
    pub id: StmtId,
    pub file: FileId,
    pub line_span: LineSpan,
    pub kind: StmtKind,
    pub text: String,
    pub owner: Owner,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    pub flows: Vec<Flow>,
    pub calls: Vec<CallSite>,
    pub use_sites: Vec<UseSite>,
    /// Byte offsets of `text` in the file.
    pub byte_span: (usize, usize),
}

impl StatementNode {
    pub fn is_synthetic(&self) -> bool {
        self.kind.is_synthetic()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub class: String,
    pub name: String,
    pub param_types: Vec<String>,
    pub ret: String,
}

impl Signature {
    pub fn render(&self) -> String {
        format!("{} {}.{}({})", self.ret, self.class, self.name, self.param_types.join(", "))
    }
}

/// Structured control skeleton of a function body, mirroring the source
/// nesting with statement ids at the leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    Simple(StmtId),
    Seq(Vec<Block>),
    If { cond: StmtId, then: Box<Block>, els: Option<Box<Block>> },
    While { cond: StmtId, body: Box<Block> },
    DoWhile { body: Box<Block>, cond: StmtId },
    For { init: Vec<StmtId>, cond: Option<StmtId>, update: Vec<StmtId>, body: Box<Block> },
    ForEach { header: StmtId, body: Box<Block> },
    Switch { selector: StmtId, groups: Vec<Block>, has_default: bool },
    Labeled { label: StmtId, name: String, body: Box<Block> },
    Break { stmt: StmtId, label: Option<String> },
    Continue { stmt: StmtId, label: Option<String> },
    Return(StmtId),
    Throw(StmtId),
    Try { body: Box<Block>, catches: Vec<Block>, finally: Option<Box<Block>> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDecl {
    pub id: FuncId,
    pub class: ClassId,
    pub name: String,
    pub signature: Signature,
    pub params: Vec<String>,
    pub body: Vec<StmtId>,
    pub entry: StmtId,
    pub exit: StmtId,
    pub return_var: String,
    pub is_static: bool,
    pub is_abstract: bool,
    pub is_ctor: bool,
    /// Initializer blocks are modeled as functions with no callers.
    pub is_initializer: bool,
    pub tree: Block,
    /// Declared types of parameters and locals.
    pub var_types: BTreeMap<String, String>,
    /// Parameters and locals whose declared type is a reference type.
    pub reference_vars: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub id: ClassId,
    /// Fully qualified (`pkg.Outer.Inner`, anonymous classes `pkg.Outer$1`).
    pub name: String,
    pub simple_name: String,
    pub file: FileId,
    pub decl: StmtId,
    pub is_interface: bool,
    pub is_abstract: bool,
    pub top_level: bool,
    pub outer: Option<ClassId>,
    /// Supertypes as written (simple or dotted).
    pub supertypes_written: Vec<String>,
    /// Resolved supertypes: qualified in-repo names, or the written name when external.
    pub supertypes: Vec<String>,
    pub methods: Vec<FuncId>,
    /// Indices into `RepoModel::globals`.
    pub fields: Vec<usize>,
    pub field_types: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalDecl {
    pub statement: StmtId,
    pub kind: StmtKind,
    pub variable: Option<String>,
    pub rhs_uses: BTreeSet<String>,
    pub class: Option<ClassId>,
    pub is_static: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeHierarchy {
    /// Direct subtype → supertype edges between in-repo classes.
    pub edges: Vec<(ClassId, ClassId)>,
    /// Supertypes that do not resolve in the repository.
    pub external: Vec<(ClassId, String)>,
    /// (overriding method, overridden method), over transitive subtyping.
    pub method_overrides: Vec<(FuncId, FuncId)>,
}

impl TypeHierarchy {
    pub fn supers(&self, c: ClassId) -> impl Iterator<Item = ClassId> + '_ {
        self.edges.iter().filter(move |(s, _)| *s == c).map(|(_, t)| *t)
    }

    pub fn subs(&self, c: ClassId) -> impl Iterator<Item = ClassId> + '_ {
        self.edges.iter().filter(move |(_, t)| *t == c).map(|(s, _)| *s)
    }

    /// All transitive subtypes of `c`, excluding `c`.
    pub fn all_subtypes(&self, c: ClassId) -> BTreeSet<ClassId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![c];
        while let Some(x) = stack.pop() {
            for s in self.subs(x) {
                if out.insert(s) {
                    stack.push(s);
                }
            }
        }
        out
    }

    /// All transitive supertypes of `c`, nearest first (breadth-first).
    pub fn all_supertypes(&self, c: ClassId) -> Vec<ClassId> {
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::from([c]);
        while let Some(x) = queue.pop_front() {
            for s in self.supers(x) {
                if !out.contains(&s) {
                    out.push(s);
                    queue.push_back(s);
                }
            }
        }
        out
    }

    pub fn overriders_of(&self, f: FuncId) -> impl Iterator<Item = FuncId> + '_ {
        self.method_overrides.iter().filter(move |(_, o)| *o == f).map(|(s, _)| *s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpTarget {
    pub jump: StmtId,
    pub label: String,
    pub is_continue: bool,
    pub target_construct: StmtId,
    pub resolved_successor: StmtId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub id: FileId,
    pub path: String,
    pub text: String,
    pub package: Option<String>,
    pub imports: Vec<String>,
    /// Byte offset of the start of each line.
    pub line_starts: Vec<usize>,
}

impl SourceFile {
    pub fn new(id: FileId, path: String, text: String) -> SourceFile {
        let mut line_starts = vec![0];
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i + 1);
            }
        }
        SourceFile { id, path, text, package: None, imports: Vec::new(), line_starts }
    }

    pub fn line_count(&self) -> u32 {
        let n = self.line_starts.len() as u32;
        if self.text.ends_with('\n') {
            n - 1
        } else {
            n
        }
    }

    /// Text of a 1-based line without its terminator.
    pub fn line(&self, n: u32) -> &str {
        let i = (n as usize).saturating_sub(1);
        if i >= self.line_starts.len() {
            return "";
        }
        let start = self.line_starts[i];
        let end = self.line_starts.get(i + 1).map(|e| e - 1).unwrap_or(self.text.len());
        self.text[start..end.max(start)].trim_end_matches('\r')
    }

    pub fn lines_text(&self, span: LineSpan) -> String {
        span.lines().map(|l| self.line(l)).collect::<Vec<_>>().join("\n")
    }
}

/// Ordered by severity for exit-code selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagClass {
    Info,
    Oracle,
    Parse,
    OracleFatal,
    Config,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub module: String,
    pub class: DiagClass,
    pub file: Option<String>,
    pub line: Option<u32>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(module: &str, class: DiagClass, message: impl Into<String>) -> Diagnostic {
        Diagnostic { module: module.to_string(), class, file: None, line: None, message: message.into() }
    }

    pub fn at(mut self, file: &str, line: Option<u32>) -> Diagnostic {
        self.file = Some(file.to_string());
        self.line = line;
        self
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] ", self.module)?;
        if let Some(file) = &self.file {
            write!(f, "{file}")?;
            if let Some(l) = self.line {
                write!(f, ":{l}")?;
            }
            write!(f, ": ")?;
        }
        write!(f, "{}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoModel {
    pub files: Vec<SourceFile>,
    pub statements: Vec<StatementNode>,
    pub functions: Vec<FunctionDecl>,
    pub classes: Vec<ClassDecl>,
    pub globals: Vec<GlobalDecl>,
    pub hierarchy: TypeHierarchy,
    pub diagnostics: Vec<Diagnostic>,
}

impl RepoModel {
    pub fn stmt(&self, id: StmtId) -> &StatementNode {
        &self.statements[id.idx()]
    }

    pub fn func(&self, id: FuncId) -> &FunctionDecl {
        &self.functions[id.idx()]
    }

    pub fn class(&self, id: ClassId) -> &ClassDecl {
        &self.classes[id.idx()]
    }

    pub fn file(&self, id: FileId) -> &SourceFile {
        &self.files[id.idx()]
    }

    pub fn path_of(&self, id: StmtId) -> &str {
        &self.file(self.stmt(id).file).path
    }

    pub fn owner_func(&self, id: StmtId) -> Option<FuncId> {
        match self.stmt(id).owner {
            Owner::Function(f) => Some(f),
            Owner::Global => None,
        }
    }

    /// Function whose entry node is `id`.
    pub fn func_of_entry(&self, id: StmtId) -> Option<FuncId> {
        let f = self.owner_func(id)?;
        (self.func(f).entry == id).then_some(f)
    }

    pub fn class_by_name(&self, qualified: &str) -> Option<ClassId> {
        self.classes.iter().find(|c| c.name == qualified).map(|c| c.id)
    }

    /// Resolves a written type name as seen from `from_file`.
    ///
    /// Lookup order: exact qualified name, same file, same package,
    /// single-type import, then a unique simple-name match.
    pub fn resolve_type(&self, written: &str, from_file: FileId) -> Option<ClassId> {
        if let Some(c) = self.class_by_name(written) {
            return Some(c);
        }
        let simple = written.rsplit('.').next().unwrap_or(written);
        let cands: Vec<&ClassDecl> = self
            .classes
            .iter()
            .filter(|c| c.simple_name == simple && (written == simple || c.name.ends_with(&format!(".{written}")) || c.name == written))
            .collect();
        match cands.len() {
            0 => return None,
            1 => return Some(cands[0].id),
            _ => {}
        }
        if let Some(c) = cands.iter().find(|c| c.file == from_file) {
            return Some(c.id);
        }
        let file = self.file(from_file);
        if let Some(pkg) = &file.package {
            if let Some(c) = cands.iter().find(|c| self.file(c.file).package.as_deref() == Some(pkg.as_str())) {
                return Some(c.id);
            }
        }
        for imp in &file.imports {
            if let Some(c) = cands.iter().find(|c| c.name == *imp) {
                return Some(c.id);
            }
        }
        None
    }

    pub fn globals_of_kind(&self, kind: StmtKind) -> impl Iterator<Item = &GlobalDecl> {
        self.globals.iter().filter(move |g| g.kind == kind)
    }

    /// Locates a field definition by name, searching `from` class, its
    /// supertypes, its outer classes, then any unique match.
    pub fn find_field(&self, name: &str, from: Option<ClassId>) -> Option<&GlobalDecl> {
        let by_class = |c: ClassId| {
            self.class(c).fields.iter().map(|i| &self.globals[*i]).find(|g| g.variable.as_deref() == Some(name))
        };
        if let Some(start) = from {
            let mut c = Some(start);
            while let Some(cur) = c {
                if let Some(g) = by_class(cur) {
                    return Some(g);
                }
                for s in self.hierarchy.all_supertypes(cur) {
                    if let Some(g) = by_class(s) {
                        return Some(g);
                    }
                }
                c = self.class(cur).outer;
            }
        }
        let mut all = self.globals.iter().filter(|g| g.kind == StmtKind::GlobalDef && g.variable.as_deref() == Some(name));
        match (all.next(), all.next()) {
            (Some(g), None) => Some(g),
            _ => None,
        }
    }
}
