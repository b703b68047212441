//! Typed translation from surface programs to the core calculus.
//!
//! Elaboration is bidirectional: `synth` produces a type, `check` pushes an
//! expected type inward (which is what lets `fn x => e` and `inl e` go
//! unannotated). Operands that the core requires to be values are let-bound
//! to temporaries named `$k`, which cannot clash with source identifiers.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::alpha::alpha_eq_type;
use crate::ast::{
    fresh_name, Cmd, CmdKind, Constraint, Expr, ExprKind, Name, Priority, Side, Type,
};
use crate::prio::{ctxify, entails_le, first_unentailed, EntailContext, PartialOrder, PrioError};
use crate::subst::subst_prio;
use crate::surface::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error("type mismatch at {span}: expected {expected}, found {found}")]
    TypeMismatch {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("unbound variable at {span}: {name}")]
    UnboundVariable { span: Span, name: Name },
    #[error("constraint violated at {span}: {lhs} <= {rhs}")]
    ConstraintViolation {
        span: Span,
        lhs: Priority,
        rhs: Priority,
    },
    #[error("cycle at {span}: ordering {lo} < {hi} contradicts an earlier order")]
    CycleDetected { span: Span, lo: Name, hi: Name },
    #[error("duplicate priority at {span}: {name}")]
    DuplicatePriority { span: Span, name: Name },
    #[error("unknown priority at {span}: {name}")]
    UnknownPriority { span: Span, name: Name },
    #[error("missing annotation at {span}: {what}")]
    MissingAnnotation { span: Span, what: String },
}

impl ElabError {
    pub fn span(&self) -> Span {
        match self {
            ElabError::TypeMismatch { span, .. }
            | ElabError::UnboundVariable { span, .. }
            | ElabError::ConstraintViolation { span, .. }
            | ElabError::CycleDetected { span, .. }
            | ElabError::DuplicatePriority { span, .. }
            | ElabError::UnknownPriority { span, .. }
            | ElabError::MissingAnnotation { span, .. } => *span,
        }
    }

    /// Diagnostic code shown by the command-line driver.
    pub fn code(&self) -> &'static str {
        match self {
            ElabError::ConstraintViolation { .. } => "E-PRIO-INV",
            ElabError::CycleDetected { .. } => "E-CYCLE",
            _ => "E-TYPE",
        }
    }
}

fn mismatch(span: Span, expected: impl ToString, found: &Type) -> ElabError {
    ElabError::TypeMismatch {
        span,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// Variable typings plus the priority hypotheses in scope.
#[derive(Clone, Debug, Default)]
pub struct ElabContext {
    vars: Vec<(Name, Type)>,
    /// Surface priority-variable names and their core names.
    prios: Vec<(Name, Name)>,
    pub entail: EntailContext,
}

impl ElabContext {
    /// A context that knows every constant of `store`.
    pub fn for_store(store: &PartialOrder) -> Self {
        ElabContext {
            vars: Vec::new(),
            prios: Vec::new(),
            entail: ctxify(store),
        }
    }

    pub fn bind(&mut self, x: Name, t: Type) {
        self.vars.push((x, t));
    }

    fn lookup(&self, x: &Name) -> Option<&Type> {
        self.vars.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    fn core_prio_names(&self) -> impl Fn(&Name) -> bool + '_ {
        move |n| self.prios.iter().any(|(_, c)| c == n) || self.entail.prio_vars.contains(n)
    }
}

/// Elaboration state: the store that entailment is parameterized by (only
/// `bot`; everything else is loaded into the context) and the temporary counter.
pub struct Elaborator {
    base: PartialOrder,
    temps: u64,
}

impl Default for Elaborator {
    fn default() -> Self {
        Self::new()
    }
}

impl Elaborator {
    pub fn new() -> Self {
        Elaborator {
            base: PartialOrder::new(),
            temps: 0,
        }
    }

    fn temp(&mut self) -> Name {
        self.temps += 1;
        Name::from(format!("${}", self.temps))
    }

    fn entails(
        &self,
        ctx: &ElabContext,
        lhs: &Priority,
        rhs: &Priority,
        span: Span,
    ) -> Result<bool, ElabError> {
        entails_le(&self.base, &ctx.entail, lhs, rhs).map_err(|e| prio_error(e, span))
    }

    fn resolve_prio(
        &self,
        ctx: &ElabContext,
        name: &Name,
        span: Span,
    ) -> Result<Priority, ElabError> {
        if let Some((_, core)) = ctx.prios.iter().rev().find(|(s, _)| s == name) {
            return Ok(Priority::Var(core.clone()));
        }
        if ctx.entail.prio_vars.contains(name) {
            return Ok(Priority::Const(name.clone()));
        }
        Err(ElabError::UnboundVariable {
            span,
            name: name.clone(),
        })
    }

    fn resolve_type(&self, ctx: &mut ElabContext, t: &Type, span: Span) -> Result<Type, ElabError> {
        Ok(match t {
            Type::Unit | Type::Nat => t.clone(),
            Type::Arrow(a, b) => Type::arrow(
                self.resolve_type(ctx, a, span)?,
                self.resolve_type(ctx, b, span)?,
            ),
            Type::Prod(a, b) => Type::prod(
                self.resolve_type(ctx, a, span)?,
                self.resolve_type(ctx, b, span)?,
            ),
            Type::Sum(a, b) => Type::sum(
                self.resolve_type(ctx, a, span)?,
                self.resolve_type(ctx, b, span)?,
            ),
            Type::Thread(a, p) => Type::thread(
                self.resolve_type(ctx, a, span)?,
                self.resolve_prio(ctx, p.name(), span)?,
            ),
            Type::Cmd(a, p) => Type::cmd(
                self.resolve_type(ctx, a, span)?,
                self.resolve_prio(ctx, p.name(), span)?,
            ),
            Type::Forall(v, c, body) => {
                let core = fresh_name(v, ctx.core_prio_names());
                ctx.prios.push((v.clone(), core.clone()));
                let r = (|| {
                    let conj = c
                        .conjuncts
                        .iter()
                        .map(|(a, b)| {
                            Ok((
                                self.resolve_prio(ctx, a.name(), span)?,
                                self.resolve_prio(ctx, b.name(), span)?,
                            ))
                        })
                        .collect::<Result<Vec<_>, ElabError>>()?;
                    let body = self.resolve_type(ctx, body, span)?;
                    Ok(Type::forall(core.clone(), Constraint::new(conj), body))
                })();
                ctx.prios.pop();
                r?
            }
        })
    }

    /// Let-binds the non-values among `es` and hands the resulting values to `k`.
    fn anf(&mut self, es: Vec<Expr>, k: impl FnOnce(Vec<Expr>) -> Expr) -> Expr {
        let mut lets = Vec::new();
        let vals = es
            .into_iter()
            .map(|e| {
                if e.is_value() {
                    e
                } else {
                    let t = self.temp();
                    let v = Expr::var_n(&t);
                    lets.push((t, e));
                    v
                }
            })
            .collect();
        let mut out = k(vals);
        for (t, e) in lets.into_iter().rev() {
            out = Expr::new(ExprKind::Let(t, e, out));
        }
        out
    }

    fn with_var<T>(
        &mut self,
        ctx: &mut ElabContext,
        x: &Name,
        t: Type,
        f: impl FnOnce(&mut Self, &mut ElabContext) -> T,
    ) -> T {
        ctx.bind(x.clone(), t);
        let r = f(self, ctx);
        ctx.vars.pop();
        r
    }

    pub fn synth(&mut self, ctx: &mut ElabContext, e: &SExpr) -> Result<(Expr, Type), ElabError> {
        use SExprKind as S;
        let span = e.span;
        Ok(match &e.kind {
            S::Var(x) => {
                let t = ctx.lookup(x).ok_or_else(|| ElabError::UnboundVariable {
                    span,
                    name: x.clone(),
                })?;
                (Expr::var_n(x), t.clone())
            }
            S::Unit => (Expr::unit(), Type::Unit),
            S::Num(n) => (Expr::nat(n.clone()), Type::Nat),
            S::Input => (Expr::new(ExprKind::Input), Type::Nat),
            S::Lam(x, Some(t), body) => {
                let t = self.resolve_type(ctx, t, span)?;
                let (b, tb) = self.with_var(ctx, x, t.clone(), |s, ctx| s.synth(ctx, body))?;
                (
                    Expr::new(ExprKind::Lam(x.clone(), t.clone(), b)),
                    Type::arrow(t, tb),
                )
            }
            S::Lam(x, None, _) => {
                return Err(ElabError::MissingAnnotation {
                    span,
                    what: format!("type of parameter {x}"),
                })
            }
            S::Inl(_) | S::Inr(_) => {
                return Err(ElabError::MissingAnnotation {
                    span,
                    what: "sum type of an injection".into(),
                })
            }
            S::App(f, a) => {
                let (ef, tf) = self.synth(ctx, f)?;
                let Type::Arrow(dom, cod) = tf else {
                    return Err(mismatch(f.span, "a function type", &tf));
                };
                let ea = self.check(ctx, a, &dom)?;
                (
                    self.anf(vec![ef, ea], |v| Expr::app(v[0].clone(), v[1].clone())),
                    *cod,
                )
            }
            S::Pair(a, b) => {
                let (ea, ta) = self.synth(ctx, a)?;
                let (eb, tb) = self.synth(ctx, b)?;
                (
                    self.anf(vec![ea, eb], |v| Expr::pair(v[0].clone(), v[1].clone())),
                    Type::prod(ta, tb),
                )
            }
            S::Fst(a) | S::Snd(a) => {
                let (ea, ta) = self.synth(ctx, a)?;
                let Type::Prod(l, r) = ta else {
                    return Err(mismatch(a.span, "a product type", &ta));
                };
                let first = matches!(e.kind, S::Fst(_));
                let out = self.anf(vec![ea], |v| {
                    let v = v[0].clone();
                    Expr::new(if first {
                        ExprKind::Fst(v)
                    } else {
                        ExprKind::Snd(v)
                    })
                });
                (out, if first { *l } else { *r })
            }
            S::Case(v, x, a, y, b) => {
                let (ev, tv) = self.synth(ctx, v)?;
                let Type::Sum(l, r) = tv else {
                    return Err(mismatch(v.span, "a sum type", &tv));
                };
                let (ea, ta) = self.with_var(ctx, x, *l, |s, ctx| s.synth(ctx, a))?;
                let eb = self.with_var(ctx, y, *r, |s, ctx| s.check(ctx, b, &ta))?;
                let out = self.anf(vec![ev], |v| {
                    Expr::new(ExprKind::Case(v[0].clone(), x.clone(), ea, y.clone(), eb))
                });
                (out, ta)
            }
            S::Ifz(v, a, x, b) => {
                let ev = self.check(ctx, v, &Type::Nat)?;
                let (ea, ta) = self.synth(ctx, a)?;
                let eb = self.with_var(ctx, x, Type::Nat, |s, ctx| s.check(ctx, b, &ta))?;
                (
                    self.anf(vec![ev], |v| {
                        Expr::new(ExprKind::Ifz(v[0].clone(), ea, x.clone(), eb))
                    }),
                    ta,
                )
            }
            S::Let(decls, body) => return self.elab_let(ctx, decls, body, None),
            S::Cmd(p, m) => {
                let rho = self.resolve_prio(ctx, &p.name, p.span)?;
                let (cm, t) = self.cmd(ctx, m, &rho, None)?;
                (Expr::cmd(rho.clone(), cm), Type::cmd(t, rho))
            }
            S::PApp(p, f) => {
                let (ef, tf) = self.synth(ctx, f)?;
                let Type::Forall(pi, c, body) = tf else {
                    return Err(mismatch(f.span, "a priority-polymorphic type", &tf));
                };
                let rho = self.resolve_prio(ctx, &p.name, p.span)?;
                let inst = subst_prio(&rho, &pi, &c);
                if let Some((lhs, rhs)) = first_unentailed(&self.base, &ctx.entail, &inst)
                    .map_err(|e| prio_error(e, span))?
                {
                    return Err(ElabError::ConstraintViolation {
                        span,
                        lhs: lhs.clone(),
                        rhs: rhs.clone(),
                    });
                }
                let t = subst_prio(&rho, &pi, body.as_ref());
                (self.anf(vec![ef], |v| Expr::papp(v[0].clone(), rho)), t)
            }
            S::Output(a) => {
                let ea = self.check(ctx, a, &Type::Nat)?;
                (
                    self.anf(vec![ea], |v| Expr::new(ExprKind::Output(v[0].clone()))),
                    Type::Unit,
                )
            }
            S::Fix(x, t, body) => {
                let t = self.resolve_type(ctx, t, span)?;
                let eb = self.with_var(ctx, x, t.clone(), |s, ctx| s.check(ctx, body, &t))?;
                (Expr::new(ExprKind::Fix(x.clone(), t.clone(), eb)), t)
            }
            S::Annot(a, t) => {
                let t = self.resolve_type(ctx, t, span)?;
                (self.check(ctx, a, &t)?, t)
            }
        })
    }

    pub fn check(
        &mut self,
        ctx: &mut ElabContext,
        e: &SExpr,
        want: &Type,
    ) -> Result<Expr, ElabError> {
        use SExprKind as S;
        let span = e.span;
        match (&e.kind, want) {
            (S::Lam(x, ann, body), Type::Arrow(dom, cod)) => {
                if let Some(t) = ann {
                    let t = self.resolve_type(ctx, t, span)?;
                    if !alpha_eq_type(&t, dom) {
                        return Err(mismatch(span, want, &Type::arrow(t, Type::Unit)));
                    }
                }
                let b = self.with_var(ctx, x, (**dom).clone(), |s, ctx| s.check(ctx, body, cod))?;
                Ok(Expr::new(ExprKind::Lam(x.clone(), (**dom).clone(), b)))
            }
            (S::Inl(a) | S::Inr(a), Type::Sum(l, r)) => {
                let left = matches!(e.kind, S::Inl(_));
                let ea = self.check(ctx, a, if left { l } else { r })?;
                let side = if left { Side::Left } else { Side::Right };
                Ok(self.anf(vec![ea], |v| {
                    Expr::new(ExprKind::Inj(side, want.clone(), v[0].clone()))
                }))
            }
            (S::Pair(a, b), Type::Prod(l, r)) => {
                let ea = self.check(ctx, a, l)?;
                let eb = self.check(ctx, b, r)?;
                Ok(self.anf(vec![ea, eb], |v| Expr::pair(v[0].clone(), v[1].clone())))
            }
            (S::Case(v, x, a, y, b), _) => {
                let (ev, tv) = self.synth(ctx, v)?;
                let Type::Sum(l, r) = tv else {
                    return Err(mismatch(v.span, "a sum type", &tv));
                };
                let ea = self.with_var(ctx, x, *l, |s, ctx| s.check(ctx, a, want))?;
                let eb = self.with_var(ctx, y, *r, |s, ctx| s.check(ctx, b, want))?;
                Ok(self.anf(vec![ev], |v| {
                    Expr::new(ExprKind::Case(v[0].clone(), x.clone(), ea, y.clone(), eb))
                }))
            }
            (S::Ifz(v, a, x, b), _) => {
                let ev = self.check(ctx, v, &Type::Nat)?;
                let ea = self.check(ctx, a, want)?;
                let eb = self.with_var(ctx, x, Type::Nat, |s, ctx| s.check(ctx, b, want))?;
                Ok(self.anf(vec![ev], |v| {
                    Expr::new(ExprKind::Ifz(v[0].clone(), ea, x.clone(), eb))
                }))
            }
            (S::Let(decls, body), _) => Ok(self.elab_let(ctx, decls, body, Some(want))?.0),
            (S::Cmd(p, m), Type::Cmd(t, want_p)) => {
                let rho = self.resolve_prio(ctx, &p.name, p.span)?;
                if rho != *want_p {
                    let (_, got) = self.cmd(ctx, m, &rho, None)?;
                    return Err(mismatch(span, want, &Type::cmd(got, rho)));
                }
                let (cm, _) = self.cmd(ctx, m, &rho, Some(t))?;
                Ok(Expr::cmd(rho, cm))
            }
            _ => {
                let (ee, t) = self.synth(ctx, e)?;
                if alpha_eq_type(&t, want) {
                    Ok(ee)
                } else {
                    Err(mismatch(span, want, &t))
                }
            }
        }
    }

    fn elab_let(
        &mut self,
        ctx: &mut ElabContext,
        decls: &[Decl],
        body: &SExpr,
        want: Option<&Type>,
    ) -> Result<(Expr, Type), ElabError> {
        let Some((d, rest)) = decls.split_first() else {
            return match want {
                Some(t) => Ok((self.check(ctx, body, t)?, t.clone())),
                None => self.synth(ctx, body),
            };
        };
        let (x, ed, td) = self.decl(ctx, d)?;
        let (eb, tb) = self.with_var(ctx, &x, td.clone(), |s, ctx| {
            s.elab_let(ctx, rest, body, want)
        })?;
        let lam = Expr::new(ExprKind::Lam(x, td, eb));
        Ok((self.anf(vec![ed], |v| Expr::app(lam, v[0].clone())), tb))
    }

    /// Elaborates a declaration to the name it binds, its code and its type.
    pub fn decl(
        &mut self,
        ctx: &mut ElabContext,
        d: &Decl,
    ) -> Result<(Name, Expr, Type), ElabError> {
        let span = d.span;
        match &d.kind {
            DeclKind::Val {
                name,
                ty: Some(t),
                body,
            } => {
                let t = self.resolve_type(ctx, t, span)?;
                Ok((name.clone(), self.check(ctx, body, &t)?, t))
            }
            DeclKind::Val {
                name,
                ty: None,
                body,
            } => {
                let (e, t) = self.synth(ctx, body)?;
                Ok((name.clone(), e, t))
            }
            DeclKind::Fun(f) => {
                let (params, ret) = self.signature(ctx, f, span)?;
                let tf = arrows(&params, ret.clone());
                let body = self.fun_body(ctx, f, &tf, &params, &ret)?;
                let lam = lambdas(&params, body);
                Ok((
                    f.name.clone(),
                    Expr::new(ExprKind::Fix(f.name.clone(), tf.clone(), lam)),
                    tf,
                ))
            }
            DeclKind::PolyFun(binders, f) => {
                let saved = (ctx.prios.len(), ctx.entail.clone());
                let r = self.poly_fun(ctx, binders, f, span);
                ctx.prios.truncate(saved.0);
                ctx.entail = saved.1;
                r
            }
        }
    }

    fn poly_fun(
        &mut self,
        ctx: &mut ElabContext,
        binders: &[PrioBinder],
        f: &FunDecl,
        span: Span,
    ) -> Result<(Name, Expr, Type), ElabError> {
        let mut quants = Vec::new();
        for b in binders {
            let core = fresh_name(&b.name, ctx.core_prio_names());
            ctx.prios.push((b.name.clone(), core.clone()));
            ctx.entail.with_var(&core);
            let c = if b.constraints.is_empty() {
                Constraint::le(Priority::bot(), Priority::Var(core.clone()))
            } else {
                let conj = b
                    .constraints
                    .iter()
                    .map(|(lo, hi)| {
                        Ok((
                            self.resolve_prio(ctx, &lo.name, lo.span)?,
                            self.resolve_prio(ctx, &hi.name, hi.span)?,
                        ))
                    })
                    .collect::<Result<Vec<_>, ElabError>>()?;
                Constraint::new(conj)
            };
            ctx.entail.assume(&c);
            quants.push((core, c));
        }
        let (params, ret) = self.signature(ctx, f, span)?;
        let mono = arrows(&params, ret.clone());
        let tf = quants
            .iter()
            .rev()
            .fold(mono, |t, (v, c)| Type::forall(v.clone(), c.clone(), t));
        let body = self.fun_body(ctx, f, &tf, &params, &ret)?;
        let lam = lambdas(&params, body);
        let code = quants.iter().rev().fold(lam, |e, (v, c)| {
            Expr::new(ExprKind::PLam(v.clone(), c.clone(), e))
        });
        Ok((
            f.name.clone(),
            Expr::new(ExprKind::Fix(f.name.clone(), tf.clone(), code)),
            tf,
        ))
    }

    fn signature(
        &self,
        ctx: &mut ElabContext,
        f: &FunDecl,
        span: Span,
    ) -> Result<(Vec<(Name, Type)>, Type), ElabError> {
        let params = f
            .params
            .iter()
            .map(|(x, t)| Ok((x.clone(), self.resolve_type(ctx, t, span)?)))
            .collect::<Result<Vec<_>, ElabError>>()?;
        let ret = self.resolve_type(ctx, &f.ret, span)?;
        Ok((params, ret))
    }

    fn fun_body(
        &mut self,
        ctx: &mut ElabContext,
        f: &FunDecl,
        tf: &Type,
        params: &[(Name, Type)],
        ret: &Type,
    ) -> Result<Expr, ElabError> {
        ctx.bind(f.name.clone(), tf.clone());
        for (x, t) in params {
            ctx.bind(x.clone(), t.clone());
        }
        let r = self.check(ctx, &f.body, ret);
        ctx.vars.truncate(ctx.vars.len() - params.len() - 1);
        r
    }

    /// Elaborates a command at priority `rho`; `want` is the expected return type.
    pub fn cmd(
        &mut self,
        ctx: &mut ElabContext,
        m: &SCmd,
        rho: &Priority,
        want: Option<&Type>,
    ) -> Result<(Cmd, Type), ElabError> {
        self.stmts(ctx, &m.stmts, rho, want)
    }

    fn stmts(
        &mut self,
        ctx: &mut ElabContext,
        stmts: &[Stmt],
        rho: &Priority,
        want: Option<&Type>,
    ) -> Result<(Cmd, Type), ElabError> {
        let (first, rest) = stmts.split_first().expect("commands are nonempty");
        if rest.is_empty() {
            return self.instr(ctx, &first.instr, rho, want);
        }
        let (mi, ti) = self.instr(ctx, &first.instr, rho, None)?;
        let x = match &first.binder {
            Some(x) => x.clone(),
            None => self.temp(),
        };
        let (mr, tr) = self.with_var(ctx, &x, ti, |s, ctx| s.stmts(ctx, rest, rho, want))?;
        Ok((
            Cmd::new(CmdKind::Bind(Expr::cmd(rho.clone(), mi), x, mr)),
            tr,
        ))
    }

    fn instr(
        &mut self,
        ctx: &mut ElabContext,
        i: &Instr,
        rho: &Priority,
        want: Option<&Type>,
    ) -> Result<(Cmd, Type), ElabError> {
        match &i.kind {
            InstrKind::Ret(e) => match want {
                Some(t) => Ok((Cmd::ret(self.check(ctx, e, t)?), t.clone())),
                None => {
                    let (ee, t) = self.synth(ctx, e)?;
                    Ok((Cmd::ret(ee), t))
                }
            },
            InstrKind::Do(e) => {
                let (ee, t) = match want {
                    Some(w) => {
                        let full = Type::cmd(w.clone(), rho.clone());
                        (self.check(ctx, e, &full)?, full)
                    }
                    None => self.synth(ctx, e)?,
                };
                let payload = match t {
                    Type::Cmd(payload, p) if p == *rho => *payload,
                    other => return Err(mismatch(e.span, format!("a command at {rho}"), &other)),
                };
                let y = self.temp();
                Ok((
                    Cmd::bind(ee, y.as_str(), Cmd::ret(Expr::var_n(&y))),
                    payload,
                ))
            }
            InstrKind::Sync(e) => {
                let (ee, t) = self.synth(ctx, e)?;
                let Type::Thread(payload, target) = t else {
                    return Err(mismatch(e.span, "a thread type", &t));
                };
                if !self.entails(ctx, rho, &target, i.span)? {
                    return Err(ElabError::ConstraintViolation {
                        span: i.span,
                        lhs: rho.clone(),
                        rhs: target,
                    });
                }
                if let Some(w) = want {
                    if !alpha_eq_type(w, &payload) {
                        return Err(mismatch(i.span, w, &payload));
                    }
                }
                Ok((Cmd::sync(ee), *payload))
            }
            InstrKind::Spawn(p, body) => {
                let target = self.resolve_prio(ctx, &p.name, p.span)?;
                let inner_want = match want {
                    Some(Type::Thread(t, q)) if *q == target => Some((**t).clone()),
                    Some(other) => {
                        let (_, got) = self.cmd(ctx, body, &target, None)?;
                        return Err(mismatch(i.span, other, &Type::thread(got, target)));
                    }
                    None => None,
                };
                let (mb, tb) = self.cmd(ctx, body, &target, inner_want.as_ref())?;
                Ok((
                    Cmd::spawn(target.clone(), tb.clone(), mb),
                    Type::thread(tb, target),
                ))
            }
        }
    }
}

fn prio_error(e: PrioError, span: Span) -> ElabError {
    match e {
        PrioError::UnknownPriority(name) => ElabError::UnboundVariable { span, name },
        PrioError::DuplicatePriority(name) => ElabError::DuplicatePriority { span, name },
        PrioError::CycleDetected { lo, hi } => ElabError::CycleDetected { span, lo, hi },
    }
}

fn arrows(params: &[(Name, Type)], ret: Type) -> Type {
    params
        .iter()
        .rev()
        .fold(ret, |t, (_, p)| Type::arrow(p.clone(), t))
}

fn lambdas(params: &[(Name, Type)], body: Expr) -> Expr {
    params.iter().rev().fold(body, |e, (x, t)| {
        Expr::new(ExprKind::Lam(x.clone(), t.clone(), e))
    })
}

/// The result of elaborating a whole program.
#[derive(Clone, Debug)]
pub struct Elaborated {
    pub cmd: Cmd,
    pub store: PartialOrder,
    /// Top-level bindings in order, with their types.
    pub bindings: Vec<(Name, Type)>,
}

pub fn elab_expr(store: &PartialOrder, e: &SExpr) -> Result<(Expr, Type), ElabError> {
    Elaborator::new().synth(&mut ElabContext::for_store(store), e)
}

pub fn elab_decl(store: &PartialOrder, d: &Decl) -> Result<(Name, Expr, Type), ElabError> {
    Elaborator::new().decl(&mut ElabContext::for_store(store), d)
}

/// Hoists priority and order declarations into the store and wraps every
/// other declaration around `main`, which runs at `bot`.
pub fn elab_program(store: PartialOrder, p: &Program) -> Result<Elaborated, ElabError> {
    let mut el = Elaborator::new();
    let mut store = store;
    let mut bound: Vec<(Name, Expr, Type)> = Vec::new();
    let mut ctx = ElabContext::for_store(&store);
    for t in &p.toplevels {
        match t {
            Toplevel::Priority(n) => {
                store
                    .declare_priority(&n.name)
                    .map_err(|e| prio_error(e, n.span))?;
            }
            Toplevel::Order(lo, hi) => {
                for r in [lo, hi] {
                    if !store.contains(&r.name) {
                        return Err(ElabError::UnknownPriority {
                            span: r.span,
                            name: r.name.clone(),
                        });
                    }
                }
                store
                    .declare_order(&lo.name, &hi.name)
                    .map_err(|e| prio_error(e, lo.span.to(hi.span)))?;
            }
            Toplevel::Decl(d) => {
                let mut dctx = ElabContext::for_store(&store);
                dctx.vars = ctx.vars.clone();
                let (x, e, ty) = el.decl(&mut dctx, d)?;
                ctx.bind(x.clone(), ty.clone());
                bound.push((x, e, ty));
            }
        }
    }
    let mut mctx = ElabContext::for_store(&store);
    mctx.vars = ctx.vars;
    let (main, _) = el.cmd(&mut mctx, &p.main, &Priority::bot(), None)?;
    let bindings = bound
        .iter()
        .map(|(x, _, t)| (x.clone(), t.clone()))
        .collect();
    let cmd = bound.into_iter().rev().fold(main, |rest, (x, e, _)| {
        Cmd::new(CmdKind::Bind(
            Expr::cmd(Priority::bot(), Cmd::ret(e)),
            x,
            rest,
        ))
    });
    Ok(Elaborated {
        cmd,
        store,
        bindings,
    })
}

/// Names of declarations, in order, mapped to the declaration indices that
/// mention them; used to prune unused library code.
pub fn referenced_names(decls: &[Decl]) -> BTreeMap<Name, Vec<usize>> {
    let mut out: BTreeMap<Name, Vec<usize>> = BTreeMap::new();
    for (i, d) in decls.iter().enumerate() {
        let mut names = Vec::new();
        decl_idents(d, &mut names);
        for n in names {
            out.entry(n).or_default().push(i);
        }
    }
    out
}

/// Every identifier used as a variable anywhere in a declaration.
pub fn decl_idents(d: &Decl, out: &mut Vec<Name>) {
    match &d.kind {
        DeclKind::Val { body, .. } => expr_idents(body, out),
        DeclKind::Fun(f) | DeclKind::PolyFun(_, f) => expr_idents(&f.body, out),
    }
}

pub fn cmd_idents(m: &SCmd, out: &mut Vec<Name>) {
    for st in &m.stmts {
        match &st.instr.kind {
            InstrKind::Do(e) | InstrKind::Sync(e) | InstrKind::Ret(e) => expr_idents(e, out),
            InstrKind::Spawn(_, m) => cmd_idents(m, out),
        }
    }
}

pub fn expr_idents(e: &SExpr, out: &mut Vec<Name>) {
    use SExprKind as S;
    match &e.kind {
        S::Var(x) => out.push(x.clone()),
        S::Unit | S::Num(_) | S::Input => {}
        S::Lam(_, _, a)
        | S::Fst(a)
        | S::Snd(a)
        | S::Inl(a)
        | S::Inr(a)
        | S::PApp(_, a)
        | S::Output(a)
        | S::Fix(_, _, a)
        | S::Annot(a, _) => expr_idents(a, out),
        S::App(a, b) | S::Pair(a, b) => {
            expr_idents(a, out);
            expr_idents(b, out);
        }
        S::Case(a, _, b, _, c) | S::Ifz(a, b, _, c) => {
            expr_idents(a, out);
            expr_idents(b, out);
            expr_idents(c, out);
        }
        S::Let(ds, b) => {
            for d in ds {
                decl_idents(d, out);
            }
            expr_idents(b, out);
        }
        S::Cmd(_, m) => cmd_idents(m, out),
    }
}
