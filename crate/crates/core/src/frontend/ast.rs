//! Syntax tree produced by the parser. Spans are byte ranges into the file
//! plus inclusive 1-based line numbers.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
    pub line: u32,
    pub end_line: u32,
}

impl Span {
    pub fn join(self, other: Span) -> Span {
        Span { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi), line: self.line.min(other.line), end_line: self.end_line.max(other.end_line) }
    }
}

const PRIMITIVES: &[&str] = &["int", "long", "short", "byte", "char", "boolean", "float", "double", "void"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeRef {
    /// Dotted name with generic arguments stripped.
    pub name: String,
    pub dims: u32,
}

impl TypeRef {
    pub fn simple(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }

    pub fn is_reference(&self) -> bool {
        self.dims > 0 || !PRIMITIVES.contains(&self.name.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = self.name.clone();
        for _ in 0..self.dims {
            s.push_str("[]");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Str(String),
    Char(String),
    Int(String),
    Float(String),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name(String),
    Field(Box<Expr>, String),
    This,
    Super,
    Lit(Lit),
    Call { recv: Option<Box<Expr>>, name: String, args: Vec<Expr> },
    /// `this(...)` or `super(...)` inside a constructor.
    CtorCall { is_super: bool, args: Vec<Expr> },
    New { ty: TypeRef, args: Vec<Expr>, body: Option<Box<ClassAst>> },
    NewArray { ty: TypeRef, dims: Vec<Expr>, init: Option<Vec<Expr>> },
    ArrayLit(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Unary { op: String, expr: Box<Expr>, postfix: bool },
    Binary { op: String, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { op: String, lhs: Box<Expr>, rhs: Box<Expr> },
    Cond { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    Cast { ty: TypeRef, expr: Box<Expr> },
    InstanceOf { expr: Box<Expr>, ty: TypeRef },
    ClassLit(TypeRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub dims: u32,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchGroup {
    /// `None` marks `default`.
    pub labels: Vec<Option<Expr>>,
    pub span: Span,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catch {
    pub ty: TypeRef,
    pub name: String,
    pub span: Span,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Local { ty: TypeRef, vars: Vec<VarDecl> },
    Expr(Expr),
    Return(Option<Expr>),
    Throw(Expr),
    If { cond: Expr, header: Span, then: Box<Stmt>, els: Option<Box<Stmt>> },
    While { cond: Expr, header: Span, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr, header: Span },
    For { init: Vec<Stmt>, cond: Option<Expr>, update: Vec<Expr>, body: Box<Stmt> },
    ForEach { ty: TypeRef, name: String, iter: Expr, header: Span, body: Box<Stmt> },
    Switch { sel: Expr, header: Span, groups: Vec<SwitchGroup> },
    Labeled { label: String, label_span: Span, body: Box<Stmt> },
    Break(Option<String>),
    Continue(Option<String>),
    Block(Vec<Stmt>),
    Try { resources: Vec<Stmt>, body: Vec<Stmt>, catches: Vec<Catch>, finally: Option<Vec<Stmt>> },
    Sync { lock: Expr, body: Vec<Stmt> },
    Assert { cond: Expr, msg: Option<Expr> },
    LocalClass(Box<ClassAst>),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Class,
    Interface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub stmts: Vec<Stmt>,
    pub open: Span,
    pub close: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodAst {
    pub modifiers: Vec<String>,
    pub ret: Option<TypeRef>,
    pub name: String,
    pub params: Vec<Param>,
    /// From the first modifier through the closing parenthesis (or `;`).
    pub sig: Span,
    pub body: Option<Body>,
    pub is_ctor: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldAst {
    pub modifiers: Vec<String>,
    pub ty: TypeRef,
    pub vars: Vec<VarDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Field(FieldAst),
    Method(MethodAst),
    Class(ClassAst),
    Init { is_static: bool, body: Body, span: Span },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAst {
    pub name: String,
    pub kind: ClassKind,
    pub modifiers: Vec<String>,
    pub extends: Vec<TypeRef>,
    pub implements: Vec<TypeRef>,
    /// Header through the opening brace.
    pub header: Span,
    pub members: Vec<Member>,
    pub close: Span,
    pub anonymous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub path: String,
    pub is_static: bool,
    pub wildcard: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompilationUnit {
    pub package: Option<(String, Span)>,
    pub imports: Vec<Import>,
    pub classes: Vec<ClassAst>,
}
