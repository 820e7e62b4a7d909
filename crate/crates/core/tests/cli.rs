//! The command-line front end, driven in-process through `cli::dispatch`.

mod common;

use std::fs;
use std::io::Cursor;
use std::path::Path;

use common::data;
use privtree::model::{parse_instance, parse_tree};
use privtree::verify::verify_gcopc;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run_with_input(args: &[&str], stdin: &str) -> Run {
    let mut argv = vec!["privtree"];
    argv.extend_from_slice(args);
    let mut input = Cursor::new(stdin.as_bytes().to_vec());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = privtree::cli::dispatch(argv, &mut input, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn run(args: &[&str]) -> Run {
    run_with_input(args, "")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn hiring() -> String {
    data("hiring.json").to_str().unwrap().to_owned()
}

#[test]
fn verify_reports_the_example_tree() {
    let tree = data("hiring_tree.json");
    let r = run(&["verify", "-i", &hiring(), "-t", s(&tree)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.lines().next().unwrap(), "feasible, goodness 1/1 (1.0000), 5 leaves, depth 2");
}

#[test]
fn verify_json_lists_leaves() {
    let r = run(&["verify", "-i", &hiring(), "-t", s(&data("hiring_tree.json")), "--json"]);
    assert_eq!(r.code, 0);
    let doc: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(doc["feasible"], true);
    assert_eq!(doc["goodness"], "1/1");
}

#[test]
fn verify_flags_violations_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let tree = dir.path().join("edu.json");
    fs::write(
        &tree,
        r#"{"ask": {"question": "Education", "branches": {"Master's": {"leaf": true}, "Bachelor's": {"leaf": true}, "None": {"leaf": true}}}}"#,
    )
    .unwrap();
    let r = run(&["verify", "-i", &hiring(), "-t", s(&tree)]);
    assert_eq!(r.code, 1);
    assert!(r.out.starts_with("infeasible"), "{}", r.out);
    assert!(r.out.contains("violation at [Education=Master's]: Nationality = local ratio 3/4"), "{}", r.out);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "-i", "/nonexistent.json", "-t", "/nonexistent.json"]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["solve", "-i", &hiring(), "--algo", "ga", "--pop", "3"]).code, 2);
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"questions": []}"#).unwrap();
    let r = run(&["solve", "-i", s(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.err.starts_with("error:"), "{}", r.err);
    assert_eq!(run(&["generate", "--types", "5..2"]).code, 2);
}

#[test]
fn help_exits_zero() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("solve"));
}

#[test]
fn solve_writes_verifiable_trees() {
    let dir = TempDir::new().unwrap();
    let inst = parse_instance(&fs::read_to_string(data("hiring.json")).unwrap()).unwrap().0;
    for algo in ["greedy", "exact", "ga", "ga-reinforced"] {
        let out = dir.path().join(format!("{algo}.json"));
        let r = run(&["solve", "-i", &hiring(), "--algo", algo, "--seed", "3", "--iters", "20", "-o", s(&out)]);
        assert_eq!(r.code, 0, "{algo}: {}", r.err);
        assert!(r.out.contains("goodness 1/1"), "{algo}: {}", r.out);
        let tree = parse_tree(&fs::read_to_string(&out).unwrap(), &inst).unwrap();
        let report = verify_gcopc(&tree, &inst).unwrap();
        assert!(report.feasible);
    }
}

#[test]
fn solve_on_infeasible_root_is_a_domain_failure() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(data("hiring.json"))
        .unwrap()
        .replace("\"2/5\"", "\"4/5\"")
        .replace("\"3/5\"", "\"9/10\"");
    let path = dir.path().join("tight.json");
    fs::write(&path, text).unwrap();
    let r = run(&["solve", "-i", s(&path), "--algo", "exact"]);
    assert_eq!(r.code, 1, "{} {}", r.out, r.err);
    assert!(r.err.contains("warning"), "{}", r.err);
}

#[test]
fn ga_runs_are_reproducible_from_the_seed() {
    let a = run(&["solve", "-i", &hiring(), "--algo", "ga-reinforced", "--seed", "7"]);
    let b = run(&["solve", "-i", &hiring(), "--algo", "ga-reinforced", "--seed", "7"]);
    assert_eq!(a.code, 0);
    assert_eq!(a.out, b.out);
    assert_eq!(a.err, b.err);
}

#[test]
fn ga_config_file_is_applied_and_flags_override_it() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("ga.json");
    fs::write(&cfg, r#"{"population_size": 4, "iterations": 3, "seed": 11}"#).unwrap();
    let r = run(&["solve", "-i", &hiring(), "--algo", "ga", "--ga-config", s(&cfg)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.err.contains("seed 11"), "{}", r.err);
    let r = run(&["solve", "-i", &hiring(), "--algo", "ga", "--ga-config", s(&cfg), "--seed", "5"]);
    assert!(r.err.contains("seed 5"), "{}", r.err);
    fs::write(&cfg, r#"{"population": 4}"#).unwrap();
    assert_eq!(run(&["solve", "-i", &hiring(), "--algo", "ga", "--ga-config", s(&cfg)]).code, 2);
}

#[test]
fn generate_is_deterministic() {
    let args = ["generate", "--types", "30", "--questions", "6", "--limit", "3", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.code, 0, "{}", a.err);
    assert_eq!(a.out, b.out);
    let (inst, _) = parse_instance(&a.out).unwrap();
    assert_eq!(inst.n_types(), 30);
    assert_eq!(inst.n_questions(), 6);
    assert_eq!(inst.question_limit(), 3);
    assert!(a.err.starts_with("generated 30 types, 6 questions"));
    let c = run(&["generate", "--types", "30", "--questions", "6", "--limit", "3", "--seed", "10"]);
    assert_ne!(a.out, c.out);
}

#[test]
fn reduce_sc_and_decide_agree_with_the_cover() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("reduced.json");
    let r = run(&["reduce-sc", "-i", s(&data("sc_example.json")), "-o", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.trim(), "omega 24, a 1/673, b 1/1, x 0/1, y 192/193, 8 types, 4 questions");
    let witness = dir.path().join("witness.json");
    let r = run(&["decide", "-i", s(&out), "-o", s(&witness), "--memo"]);
    assert_eq!(r.code, 0);
    assert!(r.out.starts_with("accepted"));
    let r = run(&["verify", "-i", s(&out), "-t", s(&witness), "--cdpc"]);
    assert_eq!(r.code, 0, "{}", r.out);
    assert!(r.out.contains("cdpc accepted"));
    let gcopc = dir.path().join("gcopc.json");
    assert_eq!(run(&["gcopc-from-cdpc", "-i", s(&out), "-o", s(&gcopc)]).code, 0);
    let (inst, _) = parse_instance(&fs::read_to_string(&gcopc).unwrap()).unwrap();
    assert!(inst.cdpc().is_none());
}

#[test]
fn decide_rejects_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let sc = dir.path().join("sc.json");
    fs::write(&sc, r#"{"universe": ["1", "2"], "sets": [["1"], ["2"]], "k": 1}"#).unwrap();
    let reduced = dir.path().join("reduced.json");
    assert_eq!(run(&["reduce-sc", "-i", s(&sc), "-o", s(&reduced)]).code, 0);
    let r = run(&["decide", "-i", s(&reduced)]);
    assert_eq!(r.code, 1);
    assert!(r.out.starts_with("rejected"));
}

#[test]
fn signtest_on_the_reference_table() {
    let r = run(&["signtest", "-i", s(&data("ga_goodness.csv"))]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(
        r.out.contains("statistic 26, n 42, ties 8, p 0.0821 (180484175953/2199023255552), alpha 0.1: H0 rejected"),
        "{}",
        r.out
    );
    let r = run(&["signtest", "-i", s(&data("ga_goodness.csv")), "--alpha", "0.05", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(doc["reject_h0"], false);
    assert_eq!(run(&["signtest", "-i", s(&data("ga_goodness.csv")), "--a", "nope"]).code, 2);
}

#[test]
fn bench_emits_csv_with_averages() {
    let r = run(&[
        "bench", "-i", &hiring(), "--algos", "greedy,ga", "--runs", "2", "--iters", "10", "--seed", "1",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let lines: Vec<&str> = r.out.lines().collect();
    assert_eq!(lines.len(), 5, "{}", r.out);
    assert!(lines[1].starts_with("hiring,greedy,1/1,"), "{}", r.out);
    assert!(lines.iter().any(|l| l.starts_with("average,ga,1/1")), "{}", r.out);
    let again = run(&[
        "bench", "-i", &hiring(), "--algos", "greedy,ga", "--runs", "2", "--iters", "10", "--seed", "1",
    ]);
    assert_eq!(r.out, again.out);
}

#[test]
fn conduct_follows_the_tree() {
    let tree = data("hiring_tree.json");
    let r = run_with_input(&["conduct", "-i", &hiring(), "-t", s(&tree)], "Yes\n1\n");
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.matches("Question ").count(), 2);
    assert!(r.out.contains("Question 1: Experience"));
    assert!(r.out.contains("Question 2: Programming"));
    assert!(r.out.contains("fitness ratio 1/1"), "{}", r.out);
    assert!(r.out.contains("Nationality = local: ratio 1/2"), "{}", r.out);
}

#[test]
fn conduct_reprompts_and_never_exceeds_the_limit() {
    let tree = data("hiring_tree.json");
    let r = run_with_input(&["conduct", "-i", &hiring(), "-t", s(&tree)], "maybe\n7\n2\nNone\n");
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.err.matches("try again").count(), 2);
    assert_eq!(r.out.matches("Question ").count(), 2);
    assert!(r.out.contains("Question 2: Education"));
}

#[test]
fn conduct_abandoned_on_end_of_input() {
    let r = run_with_input(&["conduct", "-i", &hiring(), "-t", s(&data("hiring_tree.json"))], "Yes\n");
    assert_eq!(r.code, 1);
    assert!(r.err.contains("interview abandoned"));
}
