//! Library declarations available to every program.
//!
//! The core calculus can only take numbers apart (`ifz` binds the
//! predecessor), so `succ` is a lookup table that saturates at
//! [`SUCC_LIMIT`]. Everything else is ordinary recursion on top of it.
//! Booleans are `unit + unit` with `inl` as true; sequences are a length
//! paired with an index function.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::sync::OnceLock;

use crate::ast::Name;
use crate::elab::{cmd_idents, decl_idents};
use crate::parser::parse_decls;
use crate::surface::{Decl, Program, Toplevel};

pub const SUCC_LIMIT: u32 = 127;

const LIBRARY: &str = r#"
fun pred (n : nat) : nat = ifz n then 0 else k => k
fun add (m : nat) (n : nat) : nat = ifz m then n else k => succ (add k n)
fun sub (m : nat) (n : nat) : nat = ifz n then m else k => pred (sub m k)
fun half (n : nat) : nat = ifz n then 0 else k => ifz k then 0 else j => succ (half j)
fun mul (m : nat) (n : nat) : nat = ifz m then 0 else k => add n (mul k n)
fun lt (m : nat) (n : nat) : unit + unit = ifz sub n m then inr () else k => inl ()
fun leq (m : nat) (n : nat) : unit + unit = ifz sub m n then inl () else k => inr ()
fun eq (m : nat) (n : nat) : unit + unit =
  ifz add (sub m n) (sub n m) then inl () else k => inr ()
fun fib (n : nat) : nat =
  ifz n then 0 else k => ifz k then 1 else j => add (fib k) (fib j)
val seq_empty : nat * (nat -> nat) = (0, fn i => 0)
fun seq_len (s : nat * (nat -> nat)) : nat = fst s
fun seq_get (s : nat * (nat -> nat)) (i : nat) : nat = (snd s) i
fun seq_single (x : nat) : nat * (nat -> nat) = (1, fn i => x)
fun seq_snoc (s : nat * (nat -> nat)) (x : nat) : nat * (nat -> nat) =
  (succ (fst s), fn i => ifz sub (fst s) i then x else k => (snd s) i)
fun seq_append (a : nat * (nat -> nat)) (b : nat * (nat -> nat)) : nat * (nat -> nat) =
  (add (fst a) (fst b),
   fn i => ifz sub (succ i) (fst a) then (snd a) i else k => (snd b) (sub i (fst a)))
fun seq_tabulate (n : nat) (f : nat -> nat) : nat * (nat -> nat) = (n, f)
fun seq_filter_from (keep : nat -> unit + unit) (s : nat * (nat -> nat)) (i : nat)
    (acc : nat * (nat -> nat)) : nat * (nat -> nat) =
  ifz sub (fst s) i then acc else k =>
    case keep ((snd s) i) of
      inl y => seq_filter_from keep s (succ i) (seq_snoc acc ((snd s) i))
    | inr z => seq_filter_from keep s (succ i) acc
fun seq_filter (keep : nat -> unit + unit) (s : nat * (nat -> nat)) : nat * (nat -> nat) =
  seq_filter_from keep s 0 seq_empty
fun seq_sum_from (s : nat * (nat -> nat)) (i : nat) : nat =
  ifz sub (fst s) i then 0 else k => add ((snd s) i) (seq_sum_from s (succ i))
fun seq_sum (s : nat * (nat -> nat)) : nat = seq_sum_from s 0
fun seq_output_from (s : nat * (nat -> nat)) (i : nat) : unit =
  ifz sub (fst s) i then () else k =>
    let val u = output ((snd s) i) in seq_output_from s (succ i) end
fun seq_output (s : nat * (nat -> nat)) : unit = seq_output_from s 0
"#;

fn succ_table() -> String {
    let mut s = String::from("fun succ (n0 : nat) : nat =\n");
    for k in 0..SUCC_LIMIT {
        let _ = writeln!(s, "  ifz n{k} then {} else n{} =>", k + 1, k + 1);
    }
    let _ = writeln!(s, "  {SUCC_LIMIT}");
    s
}

/// The full library source, `succ` first.
pub fn source() -> &'static str {
    static SRC: OnceLock<String> = OnceLock::new();
    SRC.get_or_init(|| format!("{}{LIBRARY}", succ_table()))
}

pub fn decls() -> &'static [Decl] {
    static DECLS: OnceLock<Vec<Decl>> = OnceLock::new();
    DECLS.get_or_init(|| parse_decls(source()).expect("library parses"))
}

/// Library declarations reachable from the identifiers `program` mentions,
/// in library order.
pub fn needed_by(program: &Program) -> Vec<Decl> {
    let lib = decls();
    let mut wanted = BTreeSet::new();
    let mut idents = Vec::new();
    for t in &program.toplevels {
        if let Toplevel::Decl(d) = t {
            decl_idents(d, &mut idents);
        }
    }
    cmd_idents(&program.main, &mut idents);
    let own: BTreeSet<&Name> = program
        .toplevels
        .iter()
        .filter_map(|t| match t {
            Toplevel::Decl(d) => Some(d.name()),
            _ => None,
        })
        .collect();
    let mut stack: Vec<Name> = idents;
    while let Some(n) = stack.pop() {
        if own.contains(&n) {
            continue;
        }
        if let Some(d) = lib.iter().find(|d| *d.name() == n) {
            if wanted.insert(n) {
                decl_idents(d, &mut stack);
            }
        }
    }
    lib.iter()
        .filter(|d| wanted.contains(d.name()))
        .cloned()
        .collect()
}

/// `program` with the library declarations it needs prepended.
pub fn with_prelude(program: &Program) -> Program {
    let mut out = program.clone();
    let lib = needed_by(program).into_iter().map(Toplevel::Decl);
    out.toplevels = lib.chain(program.toplevels.iter().cloned()).collect();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elab::elab_program;
    use crate::parser::parse;
    use crate::prio::PartialOrder;

    #[test]
    fn library_parses_and_elaborates() {
        let names: Vec<&str> = decls().iter().map(|d| d.name().as_str()).collect();
        assert_eq!(names[0], "succ");
        let p = parse("main { ret () }").unwrap();
        let mut all = p.clone();
        all.toplevels = decls().iter().cloned().map(Toplevel::Decl).collect();
        elab_program(PartialOrder::new(), &all).unwrap();
    }

    #[test]
    fn only_reachable_declarations_are_included() {
        let p = parse("main { ret mul 2 3 }").unwrap();
        let names: Vec<String> = needed_by(&p).iter().map(|d| d.name().to_string()).collect();
        assert_eq!(names, ["succ", "add", "mul"]);
        assert!(needed_by(&parse("main { ret 1 }").unwrap()).is_empty());
    }
}
