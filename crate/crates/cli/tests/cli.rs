use std::fs;
use std::path::Path;
use std::process::Command;

use dla_cli::{run_command, EXIT_CAP, EXIT_OK, EXIT_SAT, EXIT_UNSAT, EXIT_USAGE};

const EXAMPLE_1: &str = "x1 - x2 <= 0 & x1 - x3 <= 0 & -x1 + 2x3 + x2 <= 0 & -x3 <= -1\n";
const EXAMPLE_2: &str = "2x1 - x2 <= 0 & (2x2 - 4x3 <= 0 | x3 - x1 <= -1)\n";

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("dla").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_command(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn example_2_without_matrix_lists_the_derivation() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ex2.dla", EXAMPLE_2);
    let (code, out, _) = run(&["solve", &f, "--no-matrix", "--order", "x1,x2,x3"]);
    assert_eq!(code, EXIT_SAT);
    assert!(out.starts_with("SAT\n"));
    assert!(out.contains("derived predicates: 1\n  e4: -x2 + 2x3 <= -2\n"));
    assert!(out.contains("  e1 & e3 -> e4\n  e2 & e4 -> false\n"));
    assert!(out.contains("witness:"));
}

#[test]
fn example_1_is_unsat_for_every_engine() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ex1.dla", EXAMPLE_1);
    for engine in ["bfm", "split", "lazy"] {
        let (code, out, _) = run(&["solve", &f, "--engine", engine]);
        assert_eq!(code, EXIT_UNSAT, "{engine}");
        assert!(out.starts_with("UNSAT\n"));
    }
}

#[test]
fn json_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ex2.dla", EXAMPLE_2);
    let (code, out, _) = run(&["solve", &f, "--json", "--matrix-mode", "per-instance"]);
    assert_eq!(code, EXIT_SAT);
    assert_eq!(out.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["verdict", "engine", "counters", "phases", "witness", "config", "error"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["verdict"], "sat");
    assert_eq!(v["config"]["matrix"], "per-instance");
    assert!(v["witness"]["x1"].is_string());
    let c = &v["counters"];
    let implications = c["implications"].as_u64().unwrap();
    assert_eq!(implications, c["bfm"].as_u64().unwrap() + c["contradictions"].as_u64().unwrap());
}

#[test]
fn dimacs_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ex2.dla", EXAMPLE_2);
    let cnf = dir.path().join("ex2.cnf");
    let (code, _, _) = run(&["solve", &f, "--emit-dimacs", cnf.to_str().unwrap()]);
    assert_eq!(code, EXIT_SAT);
    let text = fs::read_to_string(&cnf).unwrap();
    assert!(text.contains("p cnf 6 5\n"));

    let (code, out, _) = run(&["compile", &f, "--no-matrix"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("p cnf 6 6\n"));

    let (code, _, _) = run(&["solve", &f, "--engine", "split", "--emit-dimacs", cnf.to_str().unwrap()]);
    assert_eq!(code, EXIT_SAT);
    assert!(fs::read_to_string(&cnf).unwrap().contains("p cnf 6 5\n"));
}

#[test]
fn cap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ex1.dla", EXAMPLE_1);
    let (code, _, err) = run(&["solve", &f, "--cap", "0"]);
    assert_eq!(code, EXIT_CAP);
    assert!(err.contains("blow-up"));
    let (code, _, _) = run(&["compile", &f, "--cap", "0"]);
    assert_eq!(code, EXIT_CAP);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["solve"]).0, EXIT_USAGE);
    assert_eq!(run(&["solve", "/nonexistent/file.dla"]).0, EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&["gen", "--family", "3cnf", "--n", "2", "--m", "2"]).0, EXIT_USAGE);
    assert_eq!(run(&["gen", "--family", "2cnf", "--n", "0", "--m", "2"]).0, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.dla", "x1 <= ");
    let (code, _, err) = run(&["solve", &f]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains(": 1:7: "), "{err}");
    let f = write(dir.path(), "ex2.dla", EXAMPLE_2);
    let (code, _, err) = run(&["solve", &f, "--order", "y"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("unknown variable"));
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("solve"));
}

#[test]
fn gen_output_parses_back() {
    let (code, a, _) = run(&["gen", "--family", "rand", "--n", "4", "--m", "5", "--seed", "9"]);
    assert_eq!(code, EXIT_OK);
    let (_, b, _) = run(&["gen", "--family", "rand", "--n", "4", "--m", "5", "--seed", "9"]);
    assert_eq!(a, b);
    let f = dla_core::parse(&a).unwrap();
    assert_eq!(f.root.atoms().len(), 10);
    let (_, c, _) = run(&["gen", "--family", "rand", "--n", "4", "--m", "5", "--seed", "10"]);
    assert_ne!(a, c);
}

#[test]
fn check_reports_agreement() {
    let (code, out, _) = run(&["check", "--family", "2cnf", "--n", "3", "--m", "4", "--count", "50", "--seed", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "50/50 agree\n");
}

#[test]
fn bench_prints_a_grid() {
    let (code, out, _) = run(&["bench", "--families", "rand", "--n", "2,3", "--m", "2", "--reps", "2"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.jsonl");
    let (code, out, _) = run(&[
        "bench", "--families", "2cnf", "--n", "2", "--m", "2,3", "--reps", "2", "--json", "--json-out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, fs::read_to_string(&path).unwrap());
    for line in out.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["matrix_on"]["runs"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "ex2.dla", EXAMPLE_2);
    let unsat = write(dir.path(), "ex1.dla", EXAMPLE_1);
    let exe = env!("CARGO_BIN_EXE_dla");
    let status = Command::new(exe).args(["solve", &sat]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_SAT));
    let status = Command::new(exe).args(["solve", &unsat]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_UNSAT));
    let status = Command::new(exe).args(["solve", "--bogus"]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_USAGE));
}
