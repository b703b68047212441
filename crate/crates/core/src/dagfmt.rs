//! Line-oriented text encoding of cost DAGs.
//!
//! ```text
//! # comment
//! prio hi
//! ord bot hi
//! thread main bot 3
//! thread main.0 hi 2
//! spawn main:0 main.0
//! join main.0 main:2
//! ```
//!
//! `bot` is always present. Thread declarations may appear in any order
//! relative to the edges that mention them.

use std::fmt::Write;

use thiserror::Error;

use crate::ast::{Name, BOT};
use crate::dag::CostDag;
use crate::prio::PartialOrder;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct DagParseError {
    pub line: usize,
    pub msg: String,
}

pub fn emit_dag(g: &CostDag) -> String {
    let mut s = String::new();
    for c in g.order.consts().iter().filter(|c| c.as_str() != BOT) {
        let _ = writeln!(s, "prio {c}");
    }
    for (lo, hi) in g.order.edges() {
        let _ = writeln!(s, "ord {lo} {hi}");
    }
    for (name, t) in &g.threads {
        let _ = writeln!(s, "thread {name} {} {}", t.prio, t.vertices.len());
    }
    let owners = g.owners();
    let mut spawns: Vec<_> = g.spawn_edges.iter().map(|(u, c)| (owners[u], c)).collect();
    spawns.sort();
    for ((t, i), c) in spawns {
        let _ = writeln!(s, "spawn {t}:{i} {c}");
    }
    let mut joins: Vec<_> = g.join_edges.iter().map(|(b, u)| (b, owners[u])).collect();
    joins.sort();
    for (b, (t, i)) in joins {
        let _ = writeln!(s, "join {b} {t}:{i}");
    }
    s
}

fn vertex_ref(tok: &str, line: usize) -> Result<(&str, usize), DagParseError> {
    let err = || DagParseError {
        line,
        msg: format!("expected THREAD:INDEX, found {tok:?}"),
    };
    let (t, i) = tok.rsplit_once(':').ok_or_else(err)?;
    Ok((t, i.parse().map_err(|_| err())?))
}

pub fn parse_dag(src: &str) -> Result<CostDag, DagParseError> {
    let mut order = PartialOrder::new();
    let mut threads = Vec::new();
    let mut spawns = Vec::new();
    let mut joins = Vec::new();
    for (k, raw) in src.lines().enumerate() {
        let line = k + 1;
        let text = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = text.split_whitespace().collect();
        let Some((&head, args)) = toks.split_first() else {
            continue;
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(DagParseError {
                    line,
                    msg: format!("{head} takes {n} arguments, found {}", args.len()),
                })
            }
        };
        let fail = |e: &dyn std::fmt::Display| DagParseError {
            line,
            msg: e.to_string(),
        };
        match head {
            "prio" => {
                arity(1)?;
                order
                    .declare_priority(&Name::new(args[0]))
                    .map_err(|e| fail(&e))?;
            }
            "ord" => {
                arity(2)?;
                order
                    .declare_order(&Name::new(args[0]), &Name::new(args[1]))
                    .map_err(|e| fail(&e))?;
            }
            "thread" => {
                arity(3)?;
                let n: usize = args[2].parse().map_err(|_| DagParseError {
                    line,
                    msg: format!("bad vertex count {:?}", args[2]),
                })?;
                threads.push((line, args[0].to_string(), Name::new(args[1]), n));
            }
            "spawn" => {
                arity(2)?;
                let (t, i) = vertex_ref(args[0], line)?;
                spawns.push((line, t.to_string(), i, args[1].to_string()));
            }
            "join" => {
                arity(2)?;
                let (t, i) = vertex_ref(args[1], line)?;
                joins.push((line, args[0].to_string(), t.to_string(), i));
            }
            other => {
                return Err(DagParseError {
                    line,
                    msg: format!("unknown directive {other:?}"),
                })
            }
        }
    }
    let mut g = CostDag::new(order);
    for (line, name, prio, n) in threads {
        g.add_chain(&name, &prio, n).map_err(|e| DagParseError {
            line,
            msg: e.to_string(),
        })?;
    }
    for (line, t, i, c) in spawns {
        g.add_spawn(&t, i, &c).map_err(|e| DagParseError {
            line,
            msg: e.to_string(),
        })?;
    }
    for (line, b, t, i) in joins {
        g.add_join(&b, &t, i).map_err(|e| DagParseError {
            line,
            msg: e.to_string(),
        })?;
    }
    if let Err(e) = g.graph() {
        return Err(DagParseError {
            line: 0,
            msg: e.to_string(),
        });
    }
    Ok(g)
}
