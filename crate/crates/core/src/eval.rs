//! Small-step transitions for expressions and commands.
//!
//! Both judgments are implemented by walking down the evaluation context to
//! the redex with an explicit frame stack and rebuilding on the way out, so
//! deeply nested lets and binds do not consume native stack.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::ast::{Cmd, CmdKind, Expr, ExprKind, Name, Priority, Type};
use crate::subst::{subst_expr, subst_prio};

/// The label of a transition.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Silent,
    /// Receives `v` from thread `b`.
    SyncFrom(Name, Expr),
    /// Thread `b` publishes its return value.
    RetOf(Name, Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("stuck: {0}")]
    Stuck(String),
    #[error("blocked on thread {0}")]
    Blocked(Name),
}

/// Source of `input` values and sink for `output`.
pub trait Io {
    fn input(&mut self) -> BigUint;
    fn output(&mut self, n: &BigUint);
}

/// Discards output and reads zeros.
pub struct NullIo;

impl Io for NullIo {
    fn input(&mut self) -> BigUint {
        BigUint::zero()
    }
    fn output(&mut self, _: &BigUint) {}
}

/// Positions of a node that must hold values before its rule fires. The
/// first position of `let` is the only one that source terms leave unevaluated;
/// the others fill up with non-values only when a `fix` is substituted for a
/// variable.
pub(crate) fn operands(e: &Expr) -> Vec<&Expr> {
    use ExprKind::*;
    match e.kind() {
        Let(_, a, _)
        | Ifz(a, ..)
        | Fst(a)
        | Snd(a)
        | Output(a)
        | Inj(_, _, a)
        | Case(a, ..)
        | PApp(a, _) => vec![a],
        App(a, b) | Pair(a, b) => vec![a, b],
        _ => Vec::new(),
    }
}

pub(crate) fn replace_operand(e: &Expr, i: usize, new: Expr) -> Expr {
    use ExprKind::*;
    let kind = match (e.kind(), i) {
        (Let(x, _, b), 0) => Let(x.clone(), new, b.clone()),
        (Ifz(_, a, x, b), 0) => Ifz(new, a.clone(), x.clone(), b.clone()),
        (Fst(_), 0) => Fst(new),
        (Snd(_), 0) => Snd(new),
        (Output(_), 0) => Output(new),
        (Inj(s, t, _), 0) => Inj(*s, t.clone(), new),
        (Case(_, x, a, y, b), 0) => Case(new, x.clone(), a.clone(), y.clone(), b.clone()),
        (PApp(_, p), 0) => PApp(new, p.clone()),
        (App(_, b), 0) => App(new, b.clone()),
        (App(a, _), 1) => App(a.clone(), new),
        (Pair(_, b), 0) => Pair(new, b.clone()),
        (Pair(a, _), 1) => Pair(a.clone(), new),
        _ => unreachable!("no operand {i} in {e}"),
    };
    Expr::new(kind)
}

pub(crate) fn first_nonvalue_operand(e: &Expr) -> Option<(usize, Expr)> {
    operands(e)
        .into_iter()
        .enumerate()
        .find(|(_, o)| !o.is_value())
        .map(|(i, o)| (i, o.clone()))
}

fn stuck(e: &Expr) -> StepError {
    StepError::Stuck(format!("no rule applies to {e}"))
}

/// Fires the rule for a node whose operands are all values.
pub(crate) fn reduce(e: &Expr, io: &mut dyn Io) -> Result<Expr, StepError> {
    use ExprKind::*;
    Ok(match e.kind() {
        Let(x, v, body) => subst_expr(v, x, body),
        Ifz(v, e1, x, e2) => {
            let n = v.as_num().ok_or_else(|| stuck(e))?;
            if n.is_zero() {
                e1.clone()
            } else {
                subst_expr(&Expr::nat(n - BigUint::one()), x, e2)
            }
        }
        App(f, v) => match f.kind() {
            Lam(x, _, body) => subst_expr(v, x, body),
            _ => return Err(stuck(e)),
        },
        Pair(a, b) => Expr::pair_v(a.clone(), b.clone()),
        Fst(v) | Snd(v) => match v.kind() {
            PairV(a, b) => {
                if matches!(e.kind(), Fst(_)) {
                    a.clone()
                } else {
                    b.clone()
                }
            }
            _ => return Err(stuck(e)),
        },
        Inj(s, t, v) => Expr::new(InjV(*s, t.clone(), v.clone())),
        Case(v, x, e1, y, e2) => match v.kind() {
            InjV(crate::ast::Side::Left, _, w) => subst_expr(w, x, e1),
            InjV(crate::ast::Side::Right, _, w) => subst_expr(w, y, e2),
            _ => return Err(stuck(e)),
        },
        Output(v) => {
            io.output(v.as_num().ok_or_else(|| stuck(e))?);
            Expr::unit()
        }
        Input => Expr::nat(io.input()),
        PApp(f, rho) => match f.kind() {
            PLam(pi, _, body) => subst_prio(rho, pi, body),
            _ => return Err(stuck(e)),
        },
        Fix(x, _, body) => subst_expr(e, x, body),
        _ => return Err(stuck(e)),
    })
}

/// One transition of a closed non-value expression.
pub fn step_expr(e: &Expr, io: &mut dyn Io) -> Result<Expr, StepError> {
    if e.is_value() {
        return Err(StepError::Stuck(format!("{e} is a value")));
    }
    let mut frames: Vec<(Expr, usize)> = Vec::new();
    let mut cur = e.clone();
    while let Some((i, op)) = first_nonvalue_operand(&cur) {
        frames.push((cur, i));
        cur = op;
    }
    let mut out = reduce(&cur, io)?;
    while let Some((parent, i)) = frames.pop() {
        out = replace_operand(&parent, i, out);
    }
    Ok(out)
}

/// A thread created by a spawn step.
#[derive(Clone, Debug)]
pub struct Spawned {
    pub id: Name,
    pub prio: Priority,
    pub ret: Type,
    pub cmd: Cmd,
}

#[derive(Clone, Debug)]
pub struct CmdStep {
    pub action: Action,
    pub cmd: Cmd,
    pub spawned: Option<Spawned>,
}

/// Whether a command can take a step right now.
#[derive(Clone, Debug, PartialEq)]
pub enum Poll {
    Finished(Expr),
    Blocked(Name),
    Ready,
}

/// Descends through `bind cmd[r]{m1}` nests to the command that steps next.
fn active_redex(m: &Cmd) -> (Vec<Cmd>, Cmd) {
    let mut frames = Vec::new();
    let mut cur = m.clone();
    loop {
        let next = match cur.kind() {
            CmdKind::Bind(e, _, _) => match e.kind() {
                ExprKind::CmdV(_, inner) if inner.finished_value().is_none() => Some(inner.clone()),
                _ => None,
            },
            _ => None,
        };
        match next {
            Some(inner) => {
                frames.push(cur);
                cur = inner;
            }
            None => return (frames, cur),
        }
    }
}

fn rebuild(frames: Vec<Cmd>, mut inner: Cmd) -> Cmd {
    for outer in frames.into_iter().rev() {
        let CmdKind::Bind(e, x, rest) = outer.kind() else {
            unreachable!()
        };
        let ExprKind::CmdV(p, _) = e.kind() else {
            unreachable!()
        };
        inner = Cmd::new(CmdKind::Bind(
            Expr::cmd(p.clone(), inner),
            x.clone(),
            rest.clone(),
        ));
    }
    inner
}

pub fn poll(m: &Cmd, finished: impl Fn(&Name) -> bool) -> Poll {
    if let Some(v) = m.finished_value() {
        return Poll::Finished(v.clone());
    }
    let (_, redex) = active_redex(m);
    match redex.kind() {
        CmdKind::Sync(e) => match e.kind() {
            ExprKind::Tid(b) if !finished(b) => Poll::Blocked(b.clone()),
            _ => Poll::Ready,
        },
        _ => Poll::Ready,
    }
}

/// One transition of a command that is not `ret v`. `retained` yields the
/// return value of finished threads; `fresh` mints spawn names.
pub fn step_cmd(
    m: &Cmd,
    retained: impl Fn(&Name) -> Option<Expr>,
    fresh: &mut dyn FnMut() -> Name,
    io: &mut dyn Io,
) -> Result<CmdStep, StepError> {
    if m.finished_value().is_some() {
        return Err(StepError::Stuck(format!("{m} is finished")));
    }
    let (frames, redex) = active_redex(m);
    let mut action = Action::Silent;
    let mut spawned = None;
    let next = match redex.kind() {
        CmdKind::Bind(e, x, rest) => {
            if !e.is_value() {
                Cmd::new(CmdKind::Bind(step_expr(e, io)?, x.clone(), rest.clone()))
            } else {
                match e.kind() {
                    ExprKind::CmdV(_, inner) => match inner.finished_value() {
                        Some(v) => subst_expr(v, x, rest),
                        None => unreachable!("active_redex descends into running binds"),
                    },
                    _ => return Err(StepError::Stuck(format!("bind of a non-command {e}"))),
                }
            }
        }
        CmdKind::Spawn(p, t, body) => {
            let b = fresh();
            spawned = Some(Spawned {
                id: b.clone(),
                prio: p.clone(),
                ret: t.clone(),
                cmd: body.clone(),
            });
            Cmd::ret(Expr::new(ExprKind::Tid(b)))
        }
        CmdKind::Sync(e) => {
            if !e.is_value() {
                Cmd::sync(step_expr(e, io)?)
            } else {
                match e.kind() {
                    ExprKind::Tid(b) => {
                        let v = retained(b).ok_or_else(|| StepError::Blocked(b.clone()))?;
                        action = Action::SyncFrom(b.clone(), v.clone());
                        Cmd::ret(v)
                    }
                    _ => return Err(StepError::Stuck(format!("sync on a non-thread {e}"))),
                }
            }
        }
        CmdKind::Ret(e) => Cmd::ret(step_expr(e, io)?),
    };
    Ok(CmdStep {
        action,
        cmd: rebuild(frames, next),
        spawned,
    })
}

/// Runs an expression to a value, counting steps.
pub fn eval_expr(e: &Expr, io: &mut dyn Io, fuel: u64) -> Result<(Expr, u64), StepError> {
    let mut cur = e.clone();
    let mut steps = 0;
    while !cur.is_value() {
        if steps == fuel {
            return Err(StepError::Stuck(format!("fuel of {fuel} steps exhausted")));
        }
        cur = step_expr(&cur, io)?;
        steps += 1;
    }
    Ok((cur, steps))
}
