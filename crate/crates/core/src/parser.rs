//! Lexer and recursive-descent parser for PriML source text.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::ast::{Constraint, Name, Priority, Type};
use crate::surface::*;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(BigUint),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Num(n) => write!(f, "numeral `{n}`"),
            Tok::Kw(k) | Tok::Sym(k) => write!(f, "`{k}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "priority", "order", "val", "fun", "main", "fn", "let", "in", "end", "ifz", "then", "else",
    "case", "of", "inl", "inr", "fst", "snd", "output", "input", "fix", "is", "cmd", "spawn",
    "sync", "ret", "do", "unit", "nat", "thread", "forall",
];

// Longest first, so that `<-` wins over `<`.
const SYMBOLS: &[&str] = &[
    "=>", "->", "<-", "<=", "(", ")", "{", "}", "[", "]", ",", ";", ":", "=", "<", "*", "+", "|",
    ".",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {span}: expected {}, found {found}", expected_list(.expected))]
pub struct SyntaxError {
    pub span: Span,
    pub expected: BTreeSet<String>,
    pub found: String,
}

fn expected_list(set: &BTreeSet<String>) -> String {
    let items: Vec<&str> = set.iter().map(String::as_str).collect();
    match items.len() {
        0 => "nothing".into(),
        1 => items[0].into(),
        _ => format!("one of {}", items.join(", ")),
    }
}

struct Token {
    tok: Tok,
    span: Span,
}

fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
        if chars[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    let err = |line, col, msg: &str, found: String| SyntaxError {
        span: Span::new(line, col, line, col),
        expected: BTreeSet::from([msg.to_string()]),
        found,
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            let mut depth = 0;
            loop {
                if i >= chars.len() {
                    return Err(err(sl, sc, "`*)`", "end of input inside a comment".into()));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    if depth == 0 {
                        break;
                    }
                } else {
                    advance(&mut i, &mut line, &mut col);
                }
            }
            continue;
        }
        let (sl, sc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                advance(&mut i, &mut line, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push(Token {
                tok,
                span: Span::new(sl, sc, line, col - 1),
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col);
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse::<BigUint>().expect("digits form a numeral");
            out.push(Token {
                tok: Tok::Num(n),
                span: Span::new(sl, sc, line, col - 1),
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                for _ in 0..s.len() {
                    advance(&mut i, &mut line, &mut col);
                }
                out.push(Token {
                    tok: Tok::Sym(s),
                    span: Span::new(sl, sc, line, col - 1),
                });
            }
            None => return Err(err(sl, sc, "a token", format!("character `{c}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col, line, col),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Span {
        let s = self.span();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        s
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(SyntaxError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(t) if *t == k)
    }

    fn sym(&mut self, s: &'static str) -> PResult<Span> {
        if self.is_sym(s) {
            Ok(self.bump())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn kw(&mut self, k: &'static str) -> PResult<Span> {
        if self.is_kw(k) {
            Ok(self.bump())
        } else {
            self.error(&[&format!("`{k}`")])
        }
    }

    fn ident(&mut self) -> PResult<(Name, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((Name::from(s), self.bump())),
            _ => self.error(&["identifier"]),
        }
    }

    fn prio_ref(&mut self) -> PResult<PrioRef> {
        let (name, span) = self.ident()?;
        Ok(PrioRef { name, span })
    }

    fn bracket_prio(&mut self) -> PResult<PrioRef> {
        self.sym("[")?;
        let p = self.prio_ref()?;
        self.sym("]")?;
        Ok(p)
    }

    fn program(&mut self) -> PResult<Program> {
        let mut toplevels = Vec::new();
        loop {
            match self.peek() {
                Tok::Kw("priority") => {
                    self.bump();
                    toplevels.push(Toplevel::Priority(self.prio_ref()?));
                }
                Tok::Kw("order") => {
                    self.bump();
                    let lo = self.prio_ref()?;
                    self.sym("<")?;
                    let hi = self.prio_ref()?;
                    toplevels.push(Toplevel::Order(lo, hi));
                }
                Tok::Kw("val") | Tok::Kw("fun") => toplevels.push(Toplevel::Decl(self.decl()?)),
                Tok::Kw("main") => break,
                _ => return self.error(&["`priority`", "`order`", "`val`", "`fun`", "`main`"]),
            }
        }
        let start = self.kw("main")?;
        let main = self.block()?;
        let main_span = start.to(self.prev_span());
        if *self.peek() != Tok::Eof {
            return self.error(&["end of input"]);
        }
        Ok(Program {
            toplevels,
            main,
            main_span,
        })
    }

    fn decl(&mut self) -> PResult<Decl> {
        let start = self.span();
        if self.is_kw("val") {
            self.bump();
            let (name, _) = self.ident()?;
            let ty = if self.is_sym(":") {
                self.bump();
                Some(self.ty()?)
            } else {
                None
            };
            self.sym("=")?;
            let body = self.expr()?;
            let span = start.to(body.span);
            return Ok(Decl {
                kind: DeclKind::Val { name, ty, body },
                span,
            });
        }
        self.kw("fun")?;
        let binders = if self.is_sym("[") {
            self.bump();
            let bs = self.binders()?;
            self.sym("]")?;
            Some(bs)
        } else {
            None
        };
        let (name, _) = self.ident()?;
        let mut params = Vec::new();
        while self.is_sym("(") {
            self.bump();
            let (x, _) = self.ident()?;
            self.sym(":")?;
            let t = self.ty()?;
            self.sym(")")?;
            params.push((x, t));
        }
        if params.is_empty() {
            return self.error(&["`(`"]);
        }
        self.sym(":")?;
        let ret = self.ty()?;
        self.sym("=")?;
        let body = self.expr()?;
        let span = start.to(body.span);
        let f = FunDecl {
            name,
            params,
            ret,
            body,
        };
        let kind = match binders {
            Some(bs) => DeclKind::PolyFun(bs, f),
            None => DeclKind::Fun(f),
        };
        Ok(Decl { kind, span })
    }

    fn binders(&mut self) -> PResult<Vec<PrioBinder>> {
        let mut out = Vec::new();
        loop {
            let (name, start) = self.ident()?;
            let mut constraints = Vec::new();
            if self.is_sym(":") {
                self.bump();
                loop {
                    let lo = self.prio_ref()?;
                    self.sym("<=")?;
                    let hi = self.prio_ref()?;
                    constraints.push((lo, hi));
                    // `, a <= b` continues this binder; `, q` starts the next one.
                    let more = self.is_sym(",")
                        && matches!(self.peek_at(1), Tok::Ident(_))
                        && matches!(self.peek_at(2), Tok::Sym("<="));
                    if !more {
                        break;
                    }
                    self.bump();
                }
            }
            out.push(PrioBinder {
                name,
                constraints,
                span: start.to(self.prev_span()),
            });
            if !self.is_sym(",") {
                return Ok(out);
            }
            self.bump();
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        if self.is_kw("forall") {
            self.bump();
            let (v, _) = self.ident()?;
            let c = if self.is_sym(":") {
                self.bump();
                let mut cs = Vec::new();
                loop {
                    let lo = self.prio_ref()?;
                    self.sym("<=")?;
                    let hi = self.prio_ref()?;
                    cs.push((Priority::Const(lo.name), Priority::Const(hi.name)));
                    if !self.is_sym(",") {
                        break;
                    }
                    self.bump();
                }
                Constraint::new(cs)
            } else {
                Constraint::le(Priority::bot(), Priority::Const(v.clone()))
            };
            self.sym(".")?;
            let body = self.ty()?;
            return Ok(Type::forall(v, c, body));
        }
        let dom = self.sum_ty()?;
        if self.is_sym("->") {
            self.bump();
            let cod = self.ty()?;
            return Ok(Type::arrow(dom, cod));
        }
        Ok(dom)
    }

    fn sum_ty(&mut self) -> PResult<Type> {
        let mut t = self.prod_ty()?;
        while self.is_sym("+") {
            self.bump();
            t = Type::sum(t, self.prod_ty()?);
        }
        Ok(t)
    }

    fn prod_ty(&mut self) -> PResult<Type> {
        let mut t = self.post_ty()?;
        while self.is_sym("*") {
            self.bump();
            t = Type::prod(t, self.post_ty()?);
        }
        Ok(t)
    }

    fn post_ty(&mut self) -> PResult<Type> {
        let mut t = match self.peek() {
            Tok::Kw("unit") => {
                self.bump();
                Type::Unit
            }
            Tok::Kw("nat") => {
                self.bump();
                Type::Nat
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.sym(")")?;
                t
            }
            _ => return self.error(&["`unit`", "`nat`", "`(`", "`forall`"]),
        };
        loop {
            if self.is_kw("thread") {
                self.bump();
                let p = self.bracket_prio()?;
                t = Type::thread(t, Priority::Const(p.name));
            } else if self.is_kw("cmd") {
                self.bump();
                let p = self.bracket_prio()?;
                t = Type::cmd(t, Priority::Const(p.name));
            } else {
                return Ok(t);
            }
        }
    }

    fn mk(kind: SExprKind, span: Span) -> SExpr {
        SExpr { kind, span }
    }

    fn expr(&mut self) -> PResult<SExpr> {
        let start = self.span();
        match self.peek() {
            Tok::Kw("fn") => {
                self.bump();
                let (x, t) = if self.is_sym("(") {
                    self.bump();
                    let (x, _) = self.ident()?;
                    self.sym(":")?;
                    let t = self.ty()?;
                    self.sym(")")?;
                    (x, Some(t))
                } else {
                    (self.ident()?.0, None)
                };
                self.sym("=>")?;
                let body = self.expr()?;
                let span = start.to(body.span);
                Ok(Self::mk(SExprKind::Lam(x, t, Box::new(body)), span))
            }
            Tok::Kw("ifz") => {
                self.bump();
                let v = self.expr()?;
                self.kw("then")?;
                let a = self.expr()?;
                self.kw("else")?;
                let (x, _) = self.ident()?;
                self.sym("=>")?;
                let b = self.expr()?;
                let span = start.to(b.span);
                Ok(Self::mk(
                    SExprKind::Ifz(Box::new(v), Box::new(a), x, Box::new(b)),
                    span,
                ))
            }
            Tok::Kw("case") => {
                self.bump();
                let v = self.expr()?;
                self.kw("of")?;
                self.kw("inl")?;
                let (x, _) = self.ident()?;
                self.sym("=>")?;
                let a = self.expr()?;
                self.sym("|")?;
                self.kw("inr")?;
                let (y, _) = self.ident()?;
                self.sym("=>")?;
                let b = self.expr()?;
                let span = start.to(b.span);
                Ok(Self::mk(
                    SExprKind::Case(Box::new(v), x, Box::new(a), y, Box::new(b)),
                    span,
                ))
            }
            Tok::Kw("fix") => {
                self.bump();
                let (x, _) = self.ident()?;
                self.sym(":")?;
                let t = self.ty()?;
                self.kw("is")?;
                let body = self.expr()?;
                let span = start.to(body.span);
                Ok(Self::mk(SExprKind::Fix(x, t, Box::new(body)), span))
            }
            _ => self.app(),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::Num(_)
                | Tok::Sym("(")
                | Tok::Sym("[")
                | Tok::Kw("let")
                | Tok::Kw("cmd")
                | Tok::Kw("input")
        )
    }

    fn app(&mut self) -> PResult<SExpr> {
        let start = self.span();
        let prefix = match self.peek() {
            Tok::Kw(k @ ("fst" | "snd" | "inl" | "inr" | "output")) => Some(*k),
            _ => None,
        };
        let mut head = match prefix {
            Some(k) => {
                self.bump();
                let a = Box::new(self.atom()?);
                let span = start.to(a.span);
                let kind = match k {
                    "fst" => SExprKind::Fst(a),
                    "snd" => SExprKind::Snd(a),
                    "inl" => SExprKind::Inl(a),
                    "inr" => SExprKind::Inr(a),
                    _ => SExprKind::Output(a),
                };
                Self::mk(kind, span)
            }
            None => self.atom()?,
        };
        while self.starts_atom() {
            let arg = self.atom()?;
            let span = head.span.to(arg.span);
            head = Self::mk(SExprKind::App(Box::new(head), Box::new(arg)), span);
        }
        Ok(head)
    }

    fn atom(&mut self) -> PResult<SExpr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Self::mk(SExprKind::Var(Name::from(s)), start))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Self::mk(SExprKind::Num(n), start))
            }
            Tok::Kw("input") => {
                self.bump();
                Ok(Self::mk(SExprKind::Input, start))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.is_sym(")") {
                    let end = self.bump();
                    return Ok(Self::mk(SExprKind::Unit, start.to(end)));
                }
                let e = self.expr()?;
                if self.is_sym(",") {
                    self.bump();
                    let b = self.expr()?;
                    let end = self.sym(")")?;
                    return Ok(Self::mk(
                        SExprKind::Pair(Box::new(e), Box::new(b)),
                        start.to(end),
                    ));
                }
                if self.is_sym(":") {
                    self.bump();
                    let t = self.ty()?;
                    let end = self.sym(")")?;
                    return Ok(Self::mk(SExprKind::Annot(Box::new(e), t), start.to(end)));
                }
                if !self.is_sym(")") {
                    return self.error(&["`)`", "`,`", "`:`"]);
                }
                self.bump();
                Ok(e)
            }
            Tok::Sym("[") => {
                let p = self.bracket_prio()?;
                let a = self.atom()?;
                let span = start.to(a.span);
                Ok(Self::mk(SExprKind::PApp(p, Box::new(a)), span))
            }
            Tok::Kw("let") => {
                self.bump();
                let mut decls = Vec::new();
                while self.is_kw("val") || self.is_kw("fun") {
                    decls.push(self.decl()?);
                }
                if decls.is_empty() {
                    return self.error(&["`val`", "`fun`"]);
                }
                self.kw("in")?;
                let body = self.expr()?;
                let end = self.kw("end")?;
                Ok(Self::mk(
                    SExprKind::Let(decls, Box::new(body)),
                    start.to(end),
                ))
            }
            Tok::Kw("cmd") => {
                self.bump();
                let p = self.bracket_prio()?;
                let m = self.block()?;
                let span = start.to(m.span);
                Ok(Self::mk(SExprKind::Cmd(p, m), span))
            }
            _ => self.error(&["expression"]),
        }
    }

    fn block(&mut self) -> PResult<SCmd> {
        let start = self.sym("{")?;
        let mut stmts = Vec::new();
        loop {
            let binder = if matches!(self.peek(), Tok::Ident(_)) {
                let (x, _) = self.ident()?;
                self.sym("<-")?;
                Some(x)
            } else {
                None
            };
            let instr = self.instr()?;
            let last_bound = binder.is_some();
            stmts.push(Stmt { binder, instr });
            if self.is_sym(";") {
                self.bump();
                continue;
            }
            if last_bound {
                return self.error(&["`;`"]);
            }
            break;
        }
        let end = self.sym("}")?;
        Ok(SCmd {
            stmts,
            span: start.to(end),
        })
    }

    fn instr(&mut self) -> PResult<Instr> {
        let start = self.span();
        let kind = match self.peek() {
            Tok::Kw("do") => {
                self.bump();
                InstrKind::Do(self.expr()?)
            }
            Tok::Kw("sync") => {
                self.bump();
                InstrKind::Sync(self.expr()?)
            }
            Tok::Kw("ret") => {
                self.bump();
                InstrKind::Ret(self.expr()?)
            }
            Tok::Kw("spawn") => {
                self.bump();
                let p = self.bracket_prio()?;
                InstrKind::Spawn(p, self.block()?)
            }
            _ => return self.error(&["`do`", "`sync`", "`spawn`", "`ret`", "identifier"]),
        };
        Ok(Instr {
            kind,
            span: start.to(self.prev_span()),
        })
    }
}

pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let toks = lex(src)?;
    Parser { toks, pos: 0 }.program()
}

/// Parses a sequence of declarations with no `main` (used for the prelude).
pub fn parse_decls(src: &str) -> Result<Vec<Decl>, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.decl()?);
    }
    Ok(out)
}

pub fn parse_expr(src: &str) -> Result<SExpr, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<Type, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(t)
}
