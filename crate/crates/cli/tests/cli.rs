//! End-to-end runs of the `primlc` binary.
//!
//! Golden files live in `tests/golden`; set `UPDATE_GOLDEN=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(stem: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(format!("{stem}.priml"))
}

fn primlc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_primlc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, want, "golden file {name} differs");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_a_well_typed_program() {
    let o = primlc(&["check", s(&corpus("qsort"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "ok: unit\n");
}

#[test]
fn check_accepts_the_trivial_program() {
    let p = scratch("trivial.priml", "main { ret () }\n");
    let o = primlc(&["check", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    let o = primlc(&["check", "--no-prelude", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn check_reports_an_inversion() {
    let path = corpus("display");
    let o = primlc(&["check", s(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(
        stderr(&o),
        format!(
            "{}: error[E-PRIO-INV]: constraint violated at 9.10-9.15: display_p <= p_1\n",
            path.display()
        )
    );
    assert!(stdout(&o).is_empty());
}

#[test]
fn syntax_errors_exit_with_a_static_failure() {
    let p = scratch("broken.priml", "main { ret ( }\n");
    let o = primlc(&["check", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[E-SYNTAX]"));
}

#[test]
fn missing_files_exit_with_an_io_failure() {
    let o = primlc(&["check", "/nonexistent/x.priml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dump_types_is_stable() {
    let o = primlc(&["check", "--dump-types", s(&corpus("qsort"))]);
    assert_eq!(o.status.code(), Some(0));
    golden("qsort_types.txt", &stdout(&o));
}

#[test]
fn run_prints_outputs() {
    let o = primlc(&["run", s(&corpus("hello")), "--input", "3,5,6"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "7\n");
}

#[test]
fn loop_spawn_prints_the_loop_before_the_sort() {
    let args = [
        "run",
        "--procs",
        "2",
        "--seed",
        "1",
        "--join-all",
        "--input",
        "3,5,6",
        "--stats",
    ];
    let path = corpus("loop_spawn");
    let trace_a = scratch("trace_a.txt", "");
    let trace_b = scratch("trace_b.txt", "");
    let a = primlc(&[&args[..], &[s(&path), "--trace", s(&trace_a)]].concat());
    let b = primlc(&[&args[..], &[s(&path), "--trace", s(&trace_b)]].concat());
    assert_eq!(a.status.code(), Some(0));
    let out = stdout(&a);
    assert!(out.starts_with("100\n1\n3\n4\n5\n8\nvalue: ()\n"), "{out}");
    assert_eq!(out, stdout(&b));
    golden("loop_spawn_stats.txt", &out);
    let ta = std::fs::read(&trace_a).unwrap();
    assert!(!ta.is_empty());
    assert_eq!(ta, std::fs::read(&trace_b).unwrap());
}

#[test]
fn fuel_exhaustion_has_its_own_exit_code() {
    let p = scratch(
        "spin.priml",
        "fun spin (n : nat) : unit = spin n\nmain { ret spin 0 }\n",
    );
    for cmd in ["run", "cost"] {
        let o = Command::new(env!("CARGO_BIN_EXE_primlc"))
            .args([cmd, s(&p)])
            .env("PRIML_FUEL", "500")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(4), "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).contains("fuel"));
    }
}

#[test]
fn emitted_graphs_reimport_losslessly() {
    let dag = scratch("fork_join.dag", "");
    let o = primlc(&[
        "cost",
        s(&corpus("fork_join_sum")),
        "--emit-dag",
        s(&dag),
        "--check-wf",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("well-formed: true"));
    let text = std::fs::read_to_string(&dag).unwrap();
    let g = priml::dagfmt::parse_dag(&text).unwrap();
    assert_eq!(priml::dagfmt::emit_dag(&g), text);
    let work = format!("work: {}\n", g.work());
    let span = format!("span: {}\n", g.graph().unwrap().span());
    assert!(report.contains(&work) && report.contains(&span), "{report}");
    let sim = stdout(&primlc(&["sim", s(&dag), "--procs", "2", "--det"]));
    let (_, fields) = sim.split_once("---\n").unwrap();
    golden("fork_join_sim.txt", fields);
}

#[test]
fn serial_programs_have_span_equal_to_work() {
    let p = scratch("serial.priml", "fun sum (n : nat) : nat = ifz n then 0 else m => succ (sum m)\nmain { ret output (sum 6) }\n");
    let o = primlc(&["cost", s(&p)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let field = |k: &str| -> usize {
        out.lines()
            .find_map(|l| l.strip_prefix(k))
            .unwrap_or_else(|| panic!("{out}"))
            .trim()
            .parse()
            .unwrap()
    };
    assert!(field("work:") > 1);
    assert_eq!(field("work:"), field("span:"));
}

#[test]
fn sim_on_a_chain() {
    for n in [1, 4, 9] {
        let dag = scratch(&format!("chain{n}.dag"), &format!("thread main bot {n}\n"));
        let o = primlc(&["sim", s(&dag), "--procs", "1", "--check-bound", "main"]);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.contains(&format!("\nresponse.main {n}\n")), "{out}");
        assert!(out.contains("bound.holds true"));
    }
}

#[test]
fn fair_sim_reports_the_bound() {
    let dag = scratch(
        "two.dag",
        "prio lo\nprio hi\nord lo hi\nthread main bot 1\nthread a lo 6\nthread b hi 6\nspawn main:0 a\nspawn main:0 b\n",
    );
    let o = primlc(&[
        "sim",
        s(&dag),
        "--policy",
        "fair",
        "--criterion",
        "lo=0.5,hi=0.5",
        "--rho-prime",
        "lo",
        "--trials",
        "50",
        "--check-bound",
        "a",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("fair.mass 1"), "{out}");
    assert!(out.contains("fair.holds true"), "{out}");
}

#[test]
fn malformed_graphs_name_the_line() {
    let dag = scratch("bad.dag", "thread main bot 2\nspawn main:0 nowhere\n");
    let o = primlc(&["sim", s(&dag)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_rejected() {
    let o = primlc(&["run", s(&corpus("hello")), "--input", "x"]);
    assert_eq!(o.status.code(), Some(2));
}
