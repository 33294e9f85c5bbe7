use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gamlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gamlp")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn per_k(v: &Value) -> Vec<u64> {
    v["report"]["per_k"].as_array().unwrap().iter().map(|c| c["classes"].as_u64().unwrap()).collect()
}

#[test]
fn wl_and_gamlp_classes_on_a_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let hex = write(dir.path(), "hex.edges", "0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n");
    let wl = report(&gamlp(&["wl-classes", &hex, "--k", "3"]));
    assert_eq!(per_k(&wl), [1, 1, 1, 1]);
    let ga = report(&gamlp(&["gamlp-classes", &hex, "--omega", "I,A^1..A^3"]));
    assert_eq!(per_k(&ga), [1, 1, 1, 1]);
}

#[test]
fn graph_scope_separates_path_from_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "path.edges", "0 1\n1 2\n");
    let tri = write(dir.path(), "tri.edges", "0 1\n1 2\n2 0\n");
    let v = report(&gamlp(&["wl-classes", &path, &tri, "--scope", "graph", "--k", "1"]));
    assert_eq!(per_k(&v), [1, 2]);
}

#[test]
fn missing_file_is_an_input_error() {
    let out = gamlp(&["wl-classes", "/nonexistent/graph.edges", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/graph.edges"));
}

#[test]
fn bad_operator_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.edges", "0 1\n");
    assert_eq!(gamlp(&["gamlp-classes", &g, "--omega", "Q^2"]).status.code(), Some(2));
}

#[test]
fn malformed_edge_list_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.edges", "0 1\n1 x y\n");
    assert_eq!(gamlp(&["wl-classes", &g, "--k", "1"]).status.code(), Some(2));
}

#[test]
fn verify_all_and_unknown() {
    let v = report(&gamlp(&["verify"]));
    let results = v["report"].as_array().unwrap();
    assert_eq!(results.len(), 5);
    assert!(results.iter().all(|r| r["passed"] == true));
    assert_eq!(gamlp(&["verify", "nope"]).status.code(), Some(2));
}

#[test]
fn enumerate_meets_bound() {
    let v = report(&gamlp(&["enumerate", "--m", "3", "--k", "2"]));
    assert_eq!(v["report"]["bound"], 8);
    assert_eq!(v["report"]["satisfied"], true);
    let one = report(&gamlp(&["enumerate", "--m", "3", "--k", "1"]));
    assert_eq!(one["report"]["count"], 8);
}

#[test]
fn output_is_deterministic_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, threads) in [(&a, "1"), (&b, "4")] {
        let out = gamlp(&[
            "--output",
            path.to_str().unwrap(),
            "--threads",
            threads,
            "sbm",
            "bench",
            "--n",
            "300",
            "--preset",
            "snr-2.08",
            "--seeds",
            "3",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ja, jb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    let strip = |s: &str| s.lines().filter(|l| !l.contains("output =") && !l.contains("threads")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&ja), strip(&jb));
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("seed,overlap"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn config_text_is_embedded() {
    let v = report(&gamlp(&["--seed", "7", "babai", "--n", "10", "--graphs", "20"]));
    let cfg = v["config"].as_str().unwrap();
    assert!(cfg.starts_with("command = babai\n"));
    assert!(cfg.contains("seeds = 7\n"));
    assert!(cfg.contains("graphs = 20\n"));
    assert_eq!(v["report"]["pairs"], 190);
}

#[test]
fn walk_task_on_a_supplied_graph() {
    let dir = tempfile::tempdir().unwrap();
    let edges: String = (0..40).map(|i| format!("{i} {}\n{i} {}\n", (i + 1) % 40, (i + 7) % 40)).collect();
    let g = write(dir.path(), "g.edges", &edges);
    let v = report(&gamlp(&["fit-walk-task", "--graph", &g, "--length", "2", "--train", "20"]));
    let methods = v["report"]["methods"].as_array().unwrap();
    let names: Vec<&str> = methods.iter().map(|m| m["method"].as_str().unwrap()).collect();
    assert_eq!(names, ["wl-tabular", "ridge", "ridge+"]);
    assert_eq!(methods[0]["train_nmse"], 0.0);
}
