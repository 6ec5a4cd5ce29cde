//! Recursive-descent parser for the supported Java subset.

use super::ast::*;
use super::lexer::{tokenize, TokKind, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub message: String,
    /// True when the input is valid Java outside the supported subset.
    pub subset: bool,
}

type PResult<T> = Result<T, ParseError>;

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "native", "synchronized",
    "transient", "volatile", "strictfp", "default",
];

const PRIMITIVE_KW: &[&str] = &["int", "long", "short", "byte", "char", "boolean", "float", "double", "void"];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

pub fn parse(src: &str) -> PResult<CompilationUnit> {
    let toks = tokenize(src).map_err(|e| ParseError { line: e.line, message: e.message, subset: false })?;
    let mut p = Parser { toks, pos: 0 };
    p.compilation_unit()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn cur(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek(&self, k: usize) -> &Token {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn at(&self, text: &str) -> bool {
        self.cur().is(text)
    }

    fn at_eof(&self) -> bool {
        self.cur().kind == TokKind::Eof
    }

    fn at_ident(&self) -> bool {
        self.cur().kind == TokKind::Ident
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError { line: self.cur().line, message: format!("{} near {}", msg.into(), self.cur()), subset: false })
    }

    fn unsupported<T>(&self, what: &str) -> PResult<T> {
        Err(ParseError { line: self.cur().line, message: format!("unsupported construct: {what}"), subset: true })
    }

    fn expect(&mut self, text: &str) -> PResult<Token> {
        if self.at(text) {
            Ok(self.bump())
        } else {
            self.err(format!("expected `{text}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        if self.at_ident() {
            Ok(self.bump().text)
        } else {
            self.err("expected identifier")
        }
    }

    fn span_from(&self, start: usize) -> Span {
        let last = if self.pos > start { self.pos - 1 } else { start };
        let a = &self.toks[start];
        let b = &self.toks[last];
        Span { lo: a.start, hi: b.end, line: a.line, end_line: b.end_line }
    }

    fn tok_span(t: &Token) -> Span {
        Span { lo: t.start, hi: t.end, line: t.line, end_line: t.end_line }
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.at(".") && self.peek(1).kind == TokKind::Ident {
            self.bump();
            name.push('.');
            name.push_str(&self.bump().text);
        }
        Ok(name)
    }

    fn compilation_unit(&mut self) -> PResult<CompilationUnit> {
        let mut cu = CompilationUnit::default();
        self.skip_annotations()?;
        if self.at("package") {
            let start = self.pos;
            self.bump();
            let name = self.qualified_name()?;
            self.expect(";")?;
            cu.package = Some((name, self.span_from(start)));
        }
        while self.at("import") {
            let start = self.pos;
            self.bump();
            let is_static = self.eat("static");
            let mut path = self.qualified_name()?;
            let mut wildcard = false;
            if self.eat(".") {
                self.expect("*")?;
                path.push_str(".*");
                wildcard = true;
            }
            self.expect(";")?;
            cu.imports.push(Import { path, is_static, wildcard, span: self.span_from(start) });
        }
        while !self.at_eof() {
            if self.eat(";") {
                continue;
            }
            let (mods, start) = self.modifiers()?;
            cu.classes.push(self.class_decl(mods, start)?);
        }
        Ok(cu)
    }

    fn skip_annotations(&mut self) -> PResult<()> {
        while self.at("@") {
            if self.peek(1).is("interface") {
                return self.unsupported("annotation type declaration");
            }
            self.bump();
            self.qualified_name()?;
            if self.at("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        let mut depth = 0usize;
        loop {
            if self.at_eof() {
                return self.err(format!("unbalanced `{open}`"));
            }
            if self.at(open) {
                depth += 1;
            } else if self.at(close) {
                depth -= 1;
                if depth == 0 {
                    self.bump();
                    return Ok(());
                }
            }
            self.bump();
        }
    }

    /// Returns the modifiers and the index of the first non-annotation token.
    fn modifiers(&mut self) -> PResult<(Vec<String>, usize)> {
        self.skip_annotations()?;
        let start = self.pos;
        let mut mods = Vec::new();
        loop {
            if self.at("@") {
                self.skip_annotations()?;
                continue;
            }
            let t = self.cur();
            let is_mod = (t.kind == TokKind::Keyword && MODIFIERS.contains(&t.text.as_str()))
                || (t.kind == TokKind::Ident && t.text == "sealed" && self.peek(1).kind != TokKind::Op);
            // `default` is a modifier only in member position, never followed by `:`.
            if is_mod && !(t.text == "default" && self.peek(1).is(":")) {
                mods.push(self.bump().text);
            } else {
                break;
            }
        }
        Ok((mods, start))
    }

    fn class_decl(&mut self, modifiers: Vec<String>, start: usize) -> PResult<ClassAst> {
        let kind = if self.eat("class") {
            ClassKind::Class
        } else if self.eat("interface") {
            ClassKind::Interface
        } else if self.at("enum") {
            return self.unsupported("enum declaration");
        } else if self.at_ident() && self.cur().text == "record" {
            return self.unsupported("record declaration");
        } else {
            return self.err("expected class or interface declaration");
        };
        let name = self.ident()?;
        if self.at("<") {
            self.skip_type_args()?;
        }
        let mut extends = Vec::new();
        let mut implements = Vec::new();
        if self.eat("extends") {
            extends.push(self.ty()?);
            while self.eat(",") {
                extends.push(self.ty()?);
            }
        }
        if self.eat("implements") {
            implements.push(self.ty()?);
            while self.eat(",") {
                implements.push(self.ty()?);
            }
        }
        if self.at_ident() && self.cur().text == "permits" {
            self.bump();
            self.ty()?;
            while self.eat(",") {
                self.ty()?;
            }
        }
        if kind == ClassKind::Class && extends.len() > 1 {
            return self.err("class may extend only one type");
        }
        self.expect("{")?;
        let header = self.span_from(start);
        let (members, close) = self.class_body(&name)?;
        Ok(ClassAst { name, kind, modifiers, extends, implements, header, members, close, anonymous: false })
    }

    /// Parses members up to and including the closing brace.
    fn class_body(&mut self, class_name: &str) -> PResult<(Vec<Member>, Span)> {
        let mut members = Vec::new();
        loop {
            if self.at("}") {
                let close = Self::tok_span(&self.bump());
                return Ok((members, close));
            }
            if self.at_eof() {
                return self.err("unterminated class body");
            }
            if self.eat(";") {
                continue;
            }
            if self.at("{") || (self.at("static") && self.peek(1).is("{")) {
                let start = self.pos;
                let is_static = self.eat("static");
                let body = self.block_body()?;
                members.push(Member::Init { is_static, body, span: self.span_from(start) });
                continue;
            }
            let (mods, start) = self.modifiers()?;
            if self.at("class") || self.at("interface") || self.at("enum") || (self.at_ident() && self.cur().text == "record" && self.peek(1).kind == TokKind::Ident) {
                members.push(Member::Class(self.class_decl(mods, start)?));
                continue;
            }
            if self.at("<") {
                self.skip_type_args()?;
            }
            if self.at_ident() && self.cur().text == class_name && self.peek(1).is("(") {
                self.bump();
                let m = self.method_rest(mods, start, None, class_name.to_string(), true)?;
                members.push(Member::Method(m));
                continue;
            }
            let ty = self.ty()?;
            let name = self.ident()?;
            if self.at("(") {
                let m = self.method_rest(mods, start, Some(ty), name, false)?;
                members.push(Member::Method(m));
            } else {
                let vars = self.var_decls_after_first(name)?;
                self.expect(";")?;
                members.push(Member::Field(FieldAst { modifiers: mods, ty, vars, span: self.span_from(start) }));
            }
        }
    }

    fn method_rest(&mut self, modifiers: Vec<String>, start: usize, ret: Option<TypeRef>, name: String, is_ctor: bool) -> PResult<MethodAst> {
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.at(")") {
            loop {
                self.modifiers()?;
                let pstart = self.pos;
                let mut ty = self.ty()?;
                if self.eat("...") {
                    ty.dims += 1;
                }
                if self.at("this") {
                    // receiver parameter
                    self.bump();
                } else {
                    let pname = self.ident()?;
                    while self.at("[") && self.peek(1).is("]") {
                        self.bump();
                        self.bump();
                        ty.dims += 1;
                    }
                    params.push(Param { ty, name: pname, span: self.span_from(pstart) });
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let sig = self.span_from(start);
        while self.at("[") && self.peek(1).is("]") {
            self.bump();
            self.bump();
        }
        if self.eat("throws") {
            self.ty()?;
            while self.eat(",") {
                self.ty()?;
            }
        }
        let body = if self.eat(";") { None } else { Some(self.block_body()?) };
        Ok(MethodAst { modifiers, ret, name, params, sig, body, is_ctor })
    }

    fn block_body(&mut self) -> PResult<Body> {
        let open = Self::tok_span(&self.expect("{")?);
        let mut stmts = Vec::new();
        while !self.at("}") {
            if self.at_eof() {
                return self.err("unterminated block");
            }
            stmts.push(self.stmt()?);
        }
        let close = Self::tok_span(&self.bump());
        Ok(Body { stmts, open, close })
    }

    fn skip_type_args(&mut self) -> PResult<()> {
        self.expect("<")?;
        let mut depth = 1usize;
        while depth > 0 {
            if self.at_eof() {
                return self.err("unterminated type arguments");
            }
            let t = self.bump();
            if t.is("<") {
                depth += 1;
            } else if t.is(">") {
                depth -= 1;
            } else if t.is("(") || t.is(";") || t.is("{") || t.is("=") {
                return self.err("malformed type arguments");
            }
        }
        Ok(())
    }

    fn ty(&mut self) -> PResult<TypeRef> {
        self.skip_annotations()?;
        let name = if self.cur().kind == TokKind::Keyword && PRIMITIVE_KW.contains(&self.cur().text.as_str()) {
            self.bump().text
        } else {
            let mut name = self.ident()?;
            if self.at("<") {
                self.skip_type_args()?;
            }
            while self.at(".") && self.peek(1).kind == TokKind::Ident {
                self.bump();
                name.push('.');
                name.push_str(&self.bump().text);
                if self.at("<") {
                    self.skip_type_args()?;
                }
            }
            name
        };
        let mut dims = 0;
        while self.at("[") && self.peek(1).is("]") {
            self.bump();
            self.bump();
            dims += 1;
        }
        Ok(TypeRef { name, dims })
    }

    /// Parses `name [dims] [= init] {, name [dims] [= init]}` after the first name was consumed.
    fn var_decls_after_first(&mut self, first: String) -> PResult<Vec<VarDecl>> {
        let mut vars = Vec::new();
        let mut name = first;
        let mut vstart = self.pos - 1;
        loop {
            let mut dims = 0;
            while self.at("[") && self.peek(1).is("]") {
                self.bump();
                self.bump();
                dims += 1;
            }
            let init = if self.eat("=") { Some(self.var_init()?) } else { None };
            vars.push(VarDecl { name, dims, init, span: self.span_from(vstart) });
            if !self.eat(",") {
                break;
            }
            vstart = self.pos;
            name = self.ident()?;
        }
        Ok(vars)
    }

    fn var_init(&mut self) -> PResult<Expr> {
        if self.at("{") {
            self.array_lit()
        } else {
            self.expr()
        }
    }

    fn array_lit(&mut self) -> PResult<Expr> {
        let start = self.pos;
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.at("}") {
            items.push(self.var_init()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(Expr { kind: ExprKind::ArrayLit(items), span: self.span_from(start) })
    }

    // ---- statements ----

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let kind = if self.at("{") {
            let b = self.block_body()?;
            StmtKind::Block(b.stmts)
        } else if self.eat(";") {
            StmtKind::Empty
        } else if self.at("if") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let header = self.span_from(start);
            let then = Box::new(self.stmt()?);
            let els = if self.eat("else") { Some(Box::new(self.stmt()?)) } else { None };
            StmtKind::If { cond, header, then, els }
        } else if self.at("while") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let header = self.span_from(start);
            let body = Box::new(self.stmt()?);
            StmtKind::While { cond, header, body }
        } else if self.at("do") {
            self.bump();
            let body = Box::new(self.stmt()?);
            let hstart = self.pos;
            self.expect("while")?;
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            self.expect(";")?;
            let header = self.span_from(hstart);
            StmtKind::DoWhile { body, cond, header }
        } else if self.at("for") {
            self.for_stmt(start)?
        } else if self.at("switch") {
            self.bump();
            self.expect("(")?;
            let sel = self.expr()?;
            self.expect(")")?;
            let header = self.span_from(start);
            self.expect("{")?;
            let mut groups: Vec<SwitchGroup> = Vec::new();
            while !self.at("}") {
                let gstart = self.pos;
                let mut labels = Vec::new();
                while self.at("case") || self.at("default") {
                    if self.eat("default") {
                        labels.push(None);
                    } else {
                        self.bump();
                        labels.push(Some(self.ternary()?));
                        while self.eat(",") {
                            labels.push(Some(self.ternary()?));
                        }
                    }
                    if self.at("->") {
                        return self.unsupported("arrow-form switch");
                    }
                    self.expect(":")?;
                }
                if labels.is_empty() {
                    return self.err("expected `case` or `default`");
                }
                let span = self.span_from(gstart);
                let mut body = Vec::new();
                while !(self.at("case") || self.at("default") && self.peek(1).is(":") || self.at("}")) {
                    if self.at_eof() {
                        return self.err("unterminated switch");
                    }
                    body.push(self.stmt()?);
                }
                groups.push(SwitchGroup { labels, span, body });
            }
            self.expect("}")?;
            StmtKind::Switch { sel, header, groups }
        } else if self.at("return") {
            self.bump();
            let e = if self.at(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            StmtKind::Return(e)
        } else if self.at("break") || self.at("continue") {
            let is_break = self.bump().text == "break";
            let label = if self.at_ident() { Some(self.bump().text) } else { None };
            self.expect(";")?;
            if is_break {
                StmtKind::Break(label)
            } else {
                StmtKind::Continue(label)
            }
        } else if self.at("throw") {
            self.bump();
            let e = self.expr()?;
            self.expect(";")?;
            StmtKind::Throw(e)
        } else if self.at("try") {
            self.try_stmt()?
        } else if self.at("synchronized") && self.peek(1).is("(") {
            self.bump();
            self.expect("(")?;
            let lock = self.expr()?;
            self.expect(")")?;
            let b = self.block_body()?;
            StmtKind::Sync { lock, body: b.stmts }
        } else if self.at("assert") {
            self.bump();
            let cond = self.expr()?;
            let msg = if self.eat(":") { Some(self.expr()?) } else { None };
            self.expect(";")?;
            StmtKind::Assert { cond, msg }
        } else if self.at_ident() && self.peek(1).is(":") {
            let t = self.bump();
            let label_tok_span = Self::tok_span(&t);
            let colon = self.bump();
            let label_span = label_tok_span.join(Self::tok_span(&colon));
            let body = Box::new(self.stmt()?);
            StmtKind::Labeled { label: t.text, label_span, body }
        } else if self.at_ident() && self.cur().text == "yield" && self.peek(1).kind != TokKind::Op {
            return self.unsupported("switch expression");
        } else if let Some(k) = self.try_local_class()? {
            k
        } else if let Some(k) = self.try_local_decl()? {
            self.expect(";")?;
            k
        } else {
            let e = self.expr()?;
            self.expect(";")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt { kind, span: self.span_from(start) })
    }

    fn try_local_class(&mut self) -> PResult<Option<StmtKind>> {
        let save = self.pos;
        let (mods, start) = self.modifiers()?;
        if self.at("class") || self.at("interface") || self.at("enum") {
            let c = self.class_decl(mods, start)?;
            return Ok(Some(StmtKind::LocalClass(Box::new(c))));
        }
        self.pos = save;
        Ok(None)
    }

    /// Attempts `[final] Type name ...`; restores the position when the
    /// tokens do not form a declaration.
    fn try_local_decl(&mut self) -> PResult<Option<StmtKind>> {
        let save = self.pos;
        let looks = self.at_ident()
            || self.at("final")
            || self.at("@")
            || (self.cur().kind == TokKind::Keyword && PRIMITIVE_KW.contains(&self.cur().text.as_str()));
        if !looks {
            return Ok(None);
        }
        let attempt = (|| -> PResult<Option<(TypeRef, String)>> {
            self.modifiers()?;
            let ty = self.ty()?;
            if self.at_ident() && (self.peek(1).is("=") || self.peek(1).is(";") || self.peek(1).is(",") || self.peek(1).is("[") || self.peek(1).is(":")) {
                let name = self.bump().text;
                Ok(Some((ty, name)))
            } else {
                Ok(None)
            }
        })();
        match attempt {
            Ok(Some((ty, name))) => {
                if self.at(":") {
                    return self.err("unexpected `:` in declaration");
                }
                let vars = self.var_decls_after_first(name)?;
                Ok(Some(StmtKind::Local { ty, vars }))
            }
            _ => {
                self.pos = save;
                Ok(None)
            }
        }
    }

    fn for_stmt(&mut self, start: usize) -> PResult<StmtKind> {
        self.expect("for")?;
        self.expect("(")?;
        // for-each?
        let save = self.pos;
        let each = (|| -> PResult<Option<(TypeRef, String)>> {
            self.modifiers()?;
            let ty = self.ty()?;
            if self.at_ident() && self.peek(1).is(":") {
                let name = self.bump().text;
                self.bump();
                Ok(Some((ty, name)))
            } else {
                Ok(None)
            }
        })();
        if let Ok(Some((ty, name))) = each {
            let iter = self.expr()?;
            self.expect(")")?;
            let header = self.span_from(start);
            let body = Box::new(self.stmt()?);
            return Ok(StmtKind::ForEach { ty, name, iter, header, body });
        }
        self.pos = save;
        let mut init = Vec::new();
        if !self.at(";") {
            let istart = self.pos;
            if let Some(k) = self.try_local_decl()? {
                init.push(Stmt { kind: k, span: self.span_from(istart) });
            } else {
                loop {
                    let es = self.pos;
                    let e = self.expr()?;
                    init.push(Stmt { kind: StmtKind::Expr(e), span: self.span_from(es) });
                    if !self.eat(",") {
                        break;
                    }
                }
            }
        }
        self.expect(";")?;
        let cond = if self.at(";") { None } else { Some(self.expr()?) };
        self.expect(";")?;
        let mut update = Vec::new();
        if !self.at(")") {
            loop {
                update.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let body = Box::new(self.stmt()?);
        Ok(StmtKind::For { init, cond, update, body })
    }

    fn try_stmt(&mut self) -> PResult<StmtKind> {
        self.expect("try")?;
        let mut resources = Vec::new();
        if self.eat("(") {
            while !self.at(")") {
                let rstart = self.pos;
                if let Some(k) = self.try_local_decl()? {
                    resources.push(Stmt { kind: k, span: self.span_from(rstart) });
                } else {
                    let e = self.expr()?;
                    resources.push(Stmt { kind: StmtKind::Expr(e), span: self.span_from(rstart) });
                }
                if !self.eat(";") {
                    break;
                }
            }
            self.expect(")")?;
        }
        let body = self.block_body()?.stmts;
        let mut catches = Vec::new();
        while self.at("catch") {
            let cstart = self.pos;
            self.bump();
            self.expect("(")?;
            self.modifiers()?;
            let ty = self.ty()?;
            while self.eat("|") {
                self.ty()?;
            }
            let name = self.ident()?;
            self.expect(")")?;
            let span = self.span_from(cstart);
            let b = self.block_body()?;
            catches.push(Catch { ty, name, span, body: b.stmts });
        }
        let finally = if self.eat("finally") { Some(self.block_body()?.stmts) } else { None };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return self.err("try without catch or finally");
        }
        Ok(StmtKind::Try { resources, body, catches, finally })
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        if self.at_ident() && self.peek(1).is("->") {
            return self.unsupported("lambda expression");
        }
        let lhs = self.ternary()?;
        if ASSIGN_OPS.iter().any(|op| self.at(op)) {
            let op = self.bump().text;
            let rhs = if self.at("{") { self.array_lit()? } else { self.expr()? };
            return Ok(Expr {
                kind: ExprKind::Assign { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span: self.span_from(start),
            });
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let cond = self.binary(0)?;
        if self.eat("?") {
            let then = self.expr()?;
            self.expect(":")?;
            if self.at_ident() && self.peek(1).is("->") {
                return self.unsupported("lambda expression");
            }
            let els = self.ternary()?;
            return Ok(Expr {
                kind: ExprKind::Cond { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) },
                span: self.span_from(start),
            });
        }
        Ok(cond)
    }

    /// Returns the binary operator at the cursor and its token count.
    fn binop(&self) -> Option<(String, usize, u8)> {
        let t = self.cur();
        if t.kind != TokKind::Op && !t.is("instanceof") {
            return None;
        }
        if t.text == ">" {
            let n1 = self.peek(1);
            if n1.is(">") && n1.start == t.end {
                let n2 = self.peek(2);
                if n2.is(">") && n2.start == n1.end {
                    return Some((">>>".into(), 3, 8));
                }
                return Some((">>".into(), 2, 8));
            }
            return Some((">".into(), 1, 7));
        }
        let prec = match t.text.as_str() {
            "||" => 1,
            "&&" => 2,
            "|" => 3,
            "^" => 4,
            "&" => 5,
            "==" | "!=" => 6,
            "<" | "<=" | ">=" | "instanceof" => 7,
            "<<" => 8,
            "+" | "-" => 9,
            "*" | "/" | "%" => 10,
            _ => return None,
        };
        Some((t.text.clone(), 1, prec))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.pos;
        let mut lhs = self.unary()?;
        while let Some((op, ntok, prec)) = self.binop() {
            if prec <= min_prec {
                break;
            }
            for _ in 0..ntok {
                self.bump();
            }
            if op == "instanceof" {
                self.eat("final");
                let ty = self.ty()?;
                if self.at_ident() {
                    return self.unsupported("instanceof pattern binding");
                }
                lhs = Expr { kind: ExprKind::InstanceOf { expr: Box::new(lhs), ty }, span: self.span_from(start) };
                continue;
            }
            let rhs = self.binary(prec)?;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span: self.span_from(start) };
        }
        Ok(lhs)
    }

    fn starts_operand(t: &Token) -> bool {
        match t.kind {
            TokKind::Ident | TokKind::IntLit | TokKind::FloatLit | TokKind::StrLit | TokKind::CharLit => true,
            TokKind::Keyword => matches!(t.text.as_str(), "this" | "super" | "new" | "true" | "false" | "null")
                || PRIMITIVE_KW.contains(&t.text.as_str()),
            TokKind::Op => matches!(t.text.as_str(), "(" | "!" | "~"),
            TokKind::Eof => false,
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        for op in ["+", "-", "!", "~", "++", "--"] {
            if self.at(op) {
                self.bump();
                let e = self.unary()?;
                return Ok(Expr {
                    kind: ExprKind::Unary { op: op.to_string(), expr: Box::new(e), postfix: false },
                    span: self.span_from(start),
                });
            }
        }
        if self.at("(") {
            if let Some(cast) = self.try_cast(start)? {
                return Ok(cast);
            }
        }
        let e = self.primary()?;
        self.postfix(e, start)
    }

    fn try_cast(&mut self, start: usize) -> PResult<Option<Expr>> {
        let save = self.pos;
        self.bump();
        let prim = self.cur().kind == TokKind::Keyword && PRIMITIVE_KW.contains(&self.cur().text.as_str());
        if !(prim || self.at_ident()) {
            self.pos = save;
            return Ok(None);
        }
        let ty = match self.ty() {
            Ok(t) => t,
            Err(_) => {
                self.pos = save;
                return Ok(None);
            }
        };
        while self.eat("&") {
            if self.ty().is_err() {
                self.pos = save;
                return Ok(None);
            }
        }
        if !self.at(")") {
            self.pos = save;
            return Ok(None);
        }
        self.bump();
        if self.at("->") {
            return self.unsupported("lambda expression");
        }
        let is_cast = if prim && ty.dims == 0 {
            Self::starts_operand(self.cur()) || self.at("+") || self.at("-") || self.at("++") || self.at("--")
        } else {
            Self::starts_operand(self.cur())
        };
        if !is_cast {
            self.pos = save;
            return Ok(None);
        }
        let e = self.unary()?;
        Ok(Some(Expr { kind: ExprKind::Cast { ty, expr: Box::new(e) }, span: self.span_from(start) }))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.at(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let t = self.cur().clone();
        let kind = match t.kind {
            TokKind::StrLit => {
                self.bump();
                ExprKind::Lit(Lit::Str(t.text))
            }
            TokKind::CharLit => {
                self.bump();
                ExprKind::Lit(Lit::Char(t.text))
            }
            TokKind::IntLit => {
                self.bump();
                ExprKind::Lit(Lit::Int(t.text))
            }
            TokKind::FloatLit => {
                self.bump();
                ExprKind::Lit(Lit::Float(t.text))
            }
            TokKind::Ident => {
                self.bump();
                if self.at("(") {
                    let args = self.args()?;
                    ExprKind::Call { recv: None, name: t.text, args }
                } else if self.at("->") {
                    return self.unsupported("lambda expression");
                } else {
                    ExprKind::Name(t.text)
                }
            }
            TokKind::Keyword => match t.text.as_str() {
                "true" | "false" => {
                    self.bump();
                    ExprKind::Lit(Lit::Bool(t.text == "true"))
                }
                "null" => {
                    self.bump();
                    ExprKind::Lit(Lit::Null)
                }
                "this" => {
                    self.bump();
                    if self.at("(") {
                        ExprKind::CtorCall { is_super: false, args: self.args()? }
                    } else {
                        ExprKind::This
                    }
                }
                "super" => {
                    self.bump();
                    if self.at("(") {
                        ExprKind::CtorCall { is_super: true, args: self.args()? }
                    } else {
                        ExprKind::Super
                    }
                }
                "new" => return self.creator(start),
                "switch" => return self.unsupported("switch expression"),
                k if PRIMITIVE_KW.contains(&k) => {
                    let ty = self.ty()?;
                    self.expect(".")?;
                    self.expect("class")?;
                    ExprKind::ClassLit(ty)
                }
                _ => return self.err("unexpected keyword in expression"),
            },
            TokKind::Op if t.text == "(" => {
                if self.lambda_ahead() {
                    return self.unsupported("lambda expression");
                }
                self.bump();
                let inner = self.expr()?;
                self.expect(")")?;
                return Ok(Expr { kind: inner.kind, span: self.span_from(start) });
            }
            _ => return self.err("expected expression"),
        };
        Ok(Expr { kind, span: self.span_from(start) })
    }

    fn lambda_ahead(&self) -> bool {
        let mut depth = 0usize;
        let mut i = self.pos;
        while i < self.toks.len() {
            let t = &self.toks[i];
            if t.is("(") {
                depth += 1;
            } else if t.is(")") {
                depth -= 1;
                if depth == 0 {
                    return self.toks.get(i + 1).is_some_and(|n| n.is("->"));
                }
            } else if t.kind == TokKind::Eof {
                return false;
            }
            i += 1;
        }
        false
    }

    fn creator(&mut self, start: usize) -> PResult<Expr> {
        self.expect("new")?;
        let base = if self.cur().kind == TokKind::Keyword && PRIMITIVE_KW.contains(&self.cur().text.as_str()) {
            self.bump().text
        } else {
            let mut name = self.ident()?;
            if self.at("<") {
                self.skip_type_args()?;
            }
            while self.at(".") && self.peek(1).kind == TokKind::Ident {
                self.bump();
                name.push('.');
                name.push_str(&self.bump().text);
                if self.at("<") {
                    self.skip_type_args()?;
                }
            }
            name
        };
        if self.at("[") {
            let mut dims_exprs = Vec::new();
            let mut dims = 0;
            while self.at("[") {
                self.bump();
                if self.eat("]") {
                    dims += 1;
                } else {
                    dims_exprs.push(self.expr()?);
                    self.expect("]")?;
                    dims += 1;
                }
            }
            let init = if self.at("{") {
                match self.array_lit()?.kind {
                    ExprKind::ArrayLit(items) => Some(items),
                    _ => None,
                }
            } else {
                None
            };
            let ty = TypeRef { name: base, dims };
            return Ok(Expr { kind: ExprKind::NewArray { ty, dims: dims_exprs, init }, span: self.span_from(start) });
        }
        let args = self.args()?;
        let ty = TypeRef { name: base, dims: 0 };
        let body = if self.at("{") {
            let hstart = self.pos;
            self.bump();
            let header = self.span_from(hstart);
            let simple = ty.simple().to_string();
            let (members, close) = self.class_body(&format!("\0{simple}"))?;
            Some(Box::new(ClassAst {
                name: String::new(),
                kind: ClassKind::Class,
                modifiers: Vec::new(),
                extends: vec![ty.clone()],
                implements: Vec::new(),
                header,
                members,
                close,
                anonymous: true,
            }))
        } else {
            None
        };
        Ok(Expr { kind: ExprKind::New { ty, args, body }, span: self.span_from(start) })
    }

    fn postfix(&mut self, mut e: Expr, start: usize) -> PResult<Expr> {
        loop {
            if self.at("::") {
                return self.unsupported("method reference");
            }
            if self.at(".") {
                self.bump();
                if self.at("<") {
                    self.skip_type_args()?;
                }
                if self.eat("class") {
                    let ty = match expr_to_type(&e) {
                        Some(t) => t,
                        None => return self.err("invalid class literal"),
                    };
                    e = Expr { kind: ExprKind::ClassLit(ty), span: self.span_from(start) };
                    continue;
                }
                if self.eat("this") {
                    e = Expr { kind: ExprKind::This, span: self.span_from(start) };
                    continue;
                }
                if self.at("new") {
                    return self.unsupported("qualified inner class creation");
                }
                if self.at("super") {
                    self.bump();
                    e = Expr { kind: ExprKind::Super, span: self.span_from(start) };
                    continue;
                }
                let name = self.ident()?;
                if self.at("(") {
                    let args = self.args()?;
                    e = Expr { kind: ExprKind::Call { recv: Some(Box::new(e)), name, args }, span: self.span_from(start) };
                } else {
                    e = Expr { kind: ExprKind::Field(Box::new(e), name), span: self.span_from(start) };
                }
                continue;
            }
            if self.at("[") {
                if self.peek(1).is("]") {
                    // `Type[].class`
                    let mut ty = match expr_to_type(&e) {
                        Some(t) => t,
                        None => return self.err("invalid array type"),
                    };
                    while self.at("[") && self.peek(1).is("]") {
                        self.bump();
                        self.bump();
                        ty.dims += 1;
                    }
                    self.expect(".")?;
                    self.expect("class")?;
                    e = Expr { kind: ExprKind::ClassLit(ty), span: self.span_from(start) };
                    continue;
                }
                self.bump();
                let idx = self.expr()?;
                self.expect("]")?;
                e = Expr { kind: ExprKind::Index(Box::new(e), Box::new(idx)), span: self.span_from(start) };
                continue;
            }
            if self.at("++") || self.at("--") {
                let op = self.bump().text;
                e = Expr { kind: ExprKind::Unary { op, expr: Box::new(e), postfix: true }, span: self.span_from(start) };
                continue;
            }
            return Ok(e);
        }
    }
}

fn expr_to_type(e: &Expr) -> Option<TypeRef> {
    fn path(e: &Expr) -> Option<String> {
        match &e.kind {
            ExprKind::Name(n) => Some(n.clone()),
            ExprKind::Field(b, n) => Some(format!("{}.{}", path(b)?, n)),
            _ => None,
        }
    }
    path(e).map(|name| TypeRef { name, dims: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn method_body(src: &str) -> Vec<Stmt> {
        let cu = parse(&format!("class T {{ void m() {{ {src} }} }}")).unwrap();
        match &cu.classes[0].members[0] {
            Member::Method(m) => m.body.clone().unwrap().stmts,
            _ => panic!("no method"),
        }
    }

    #[test]
    fn package_imports_and_class() {
        let cu = parse("package a.b; import java.util.*; import static x.Y.z; public class C extends D implements E, F<G> { }").unwrap();
        assert_eq!(cu.package.as_ref().unwrap().0, "a.b");
        assert_eq!(cu.imports.len(), 2);
        assert!(cu.imports[0].wildcard && cu.imports[1].is_static);
        let c = &cu.classes[0];
        assert_eq!(c.extends[0].name, "D");
        assert_eq!(c.implements.iter().map(|t| t.name.as_str()).collect::<Vec<_>>(), vec!["E", "F"]);
    }

    #[test]
    fn generic_declarations_and_comparisons() {
        let body = method_body("Map<String, List<Integer>> m = new HashMap<>(); int x = a < b ? 1 : 2; if (i < n && j > k) { }");
        assert!(matches!(body[0].kind, StmtKind::Local { .. }));
        assert!(matches!(body[1].kind, StmtKind::Local { .. }));
        assert!(matches!(body[2].kind, StmtKind::If { .. }));
    }

    #[test]
    fn shift_and_cast() {
        let body = method_body("int y = (int) x >> 2; Object o = (String) s; z = (a) + b;");
        match &body[0].kind {
            StmtKind::Local { vars, .. } => match &vars[0].init.as_ref().unwrap().kind {
                ExprKind::Binary { op, lhs, .. } => {
                    assert_eq!(op, ">>");
                    assert!(matches!(lhs.kind, ExprKind::Cast { .. }));
                }
                k => panic!("{k:?}"),
            },
            _ => panic!(),
        }
        match &body[2].kind {
            StmtKind::Expr(Expr { kind: ExprKind::Assign { rhs, .. }, .. }) => {
                assert!(matches!(rhs.kind, ExprKind::Binary { .. }))
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn loops_labels_switch() {
        let body = method_body(
            "outer: for (int i = 0, j = 1; i < n; i++, j--) { for (String s : xs) { continue outer; } }
             do { x++; } while (x < 3);
             switch (k) { case 1: case 2: a(); break; default: b(); }",
        );
        match &body[0].kind {
            StmtKind::Labeled { label, body, .. } => {
                assert_eq!(label, "outer");
                match &body.kind {
                    StmtKind::For { init, update, .. } => {
                        assert_eq!(init.len(), 1);
                        assert_eq!(update.len(), 2);
                    }
                    k => panic!("{k:?}"),
                }
            }
            k => panic!("{k:?}"),
        }
        assert!(matches!(body[1].kind, StmtKind::DoWhile { .. }));
        match &body[2].kind {
            StmtKind::Switch { groups, .. } => {
                assert_eq!(groups.len(), 2);
                assert_eq!(groups[0].labels.len(), 2);
                assert_eq!(groups[1].labels, vec![None]);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn subset_violations() {
        for src in [
            "Runnable r = () -> {};",
            "list.forEach(x -> foo(x));",
            "list.forEach(System.out::println);",
            "int v = switch (k) { default -> 1; };",
        ] {
            let err = parse(&format!("class T {{ void m() {{ {src} }} }}")).unwrap_err();
            assert!(err.subset, "{src}: {err:?}");
        }
        assert!(parse("enum E { A }").unwrap_err().subset);
        assert!(!parse("class T { void m() { int = ; } }").unwrap_err().subset);
    }

    #[test]
    fn anonymous_and_nested_classes() {
        let cu = parse("class T { class In { int f; } Object o = new Base(1) { int g() { return 2; } }; }").unwrap();
        let c = &cu.classes[0];
        assert!(matches!(c.members[0], Member::Class(_)));
        match &c.members[1] {
            Member::Field(f) => match &f.vars[0].init.as_ref().unwrap().kind {
                ExprKind::New { body: Some(b), .. } => assert!(b.anonymous && b.members.len() == 1),
                k => panic!("{k:?}"),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn class_literals_and_arrays() {
        let body = method_body("Class<?>[] ts = new Class<?>[] { String.class, int.class, byte[].class }; a[i] = b[j][k];");
        match &body[0].kind {
            StmtKind::Local { ty, vars } => {
                assert_eq!(ty.dims, 1);
                match &vars[0].init.as_ref().unwrap().kind {
                    ExprKind::NewArray { init: Some(items), .. } => assert_eq!(items.len(), 3),
                    k => panic!("{k:?}"),
                }
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn spans_cover_statements() {
        let src = "class T {\n  void m(int a) {\n    int x =\n      a + 1;\n  }\n}\n";
        let cu = parse(src).unwrap();
        let Member::Method(m) = &cu.classes[0].members[0] else { panic!() };
        let s = &m.body.as_ref().unwrap().stmts[0];
        assert_eq!((s.span.line, s.span.end_line), (3, 4));
        assert_eq!(&src[s.span.lo..s.span.hi], "int x =\n      a + 1;");
        assert_eq!(&src[m.sig.lo..m.sig.hi], "void m(int a)");
    }
}
