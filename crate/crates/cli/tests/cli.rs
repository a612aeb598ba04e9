use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bridge-extrema"));
    c.env_remove("BRIDGE_EXTREMA_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn eval_ks_at_one() {
    let out = run(&["eval", "--dist", "ks", "--at", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(keys(&v), ["args", "dist", "trunc_bound", "value"]);
    assert_eq!(v["dist"], "ks");
    assert!((v["value"].as_f64().unwrap() - 0.730_000_3).abs() < 1e-7);
    assert!(v["trunc_bound"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn eval_quotient_at_one_is_one_half() {
    let v = json(&run(&["eval", "--dist", "quotient", "--at", "1.0"]));
    assert_eq!(v["value"].as_f64(), Some(0.5));
}

#[test]
fn eval_joint_takes_two_arguments() {
    let v = json(&run(&["eval", "--dist", "joint", "--at", "0.5,0.5"]));
    assert_eq!(v["args"], serde_json::json!([0.5, 0.5]));
    assert!((v["value"].as_f64().unwrap() - 0.036_054_7).abs() < 1e-7);
    assert_eq!(run(&["eval", "--dist", "joint", "--at", "0.5"]).status.code(), Some(2));
}

#[test]
fn table_matches_eval_exactly() {
    let out = run(&["table", "--dist", "kuiper", "--from", "0.1", "--to", "2.5", "--step", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let mut rows = 0;
    for line in lines {
        let (x, value) = line.split_once(',').unwrap();
        let v = json(&run(&["eval", "--dist", "kuiper", "--at", x]));
        assert_eq!(v["value"].as_f64().unwrap().to_bits(), value.parse::<f64>().unwrap().to_bits());
        rows += 1;
    }
    assert_eq!(rows, 9);
}

#[test]
fn table_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("joint.csv");
    let out = run(&[
        "table", "--dist", "joint", "--from", "0.5", "--to", "1", "--step", "0.5", "--y", "1",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(run(&["table", "--dist", "joint", "--from", "0", "--to", "1", "--step", "0.5"]).status.code(), Some(2));
}

#[test]
fn gof_test_on_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "value").unwrap();
    for i in 1..=99 {
        writeln!(file, "{}", i as f64 / 100.0).unwrap();
    }
    file.flush().unwrap();
    let path = file.path().to_str().unwrap();
    let out = run(&["test", "--file", path, "--test", "ks", "--null", "uniform"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(keys(&v), ["n", "p_value", "small_n_warning", "stat_raw", "stat_scaled", "test"]);
    assert_eq!(v["n"], 99);
    assert_eq!(v["test"], "ks");
    assert!(v["p_value"].as_f64().unwrap() > 0.99);
    let shifted = run(&["test", "--file", path, "--test", "kuiper", "--null", "normal:3,0.1"]);
    assert!(json(&shifted)["p_value"].as_f64().unwrap() < 1e-6);
}

#[test]
fn gof_small_sample_warns_on_stderr() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "0.2\n0.7\n").unwrap();
    let out = run(&["test", "--file", file.path().to_str().unwrap(), "--test", "ks-plus", "--null", "uniform"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["small_n_warning"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn gof_rejects_bad_input() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "0.2\nabc\n0.3").unwrap();
    let path = file.path().to_str().unwrap();
    assert_eq!(run(&["test", "--file", path, "--test", "ks", "--null", "uniform"]).status.code(), Some(2));
    assert_eq!(run(&["test", "--file", "/nonexistent/x.csv", "--test", "ks", "--null", "uniform"]).status.code(), Some(2));
    assert_eq!(run(&["test", "--file", path, "--test", "ks", "--null", "exp:-1"]).status.code(), Some(2));
}

#[test]
fn mc_verify_is_identical_for_one_and_eight_workers() {
    let args = ["mc-verify", "--paths", "3000", "--steps", "128", "--seed", "42"];
    let one = bin().args(args).args(["--threads", "1"]).output().unwrap();
    let eight = bin().args(args).env("BRIDGE_EXTREMA_THREADS", "8").output().unwrap();
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, eight.stdout);
    let v = json(&one);
    let checks = v.as_array().unwrap();
    assert_eq!(checks.len(), 15);
    assert_eq!(keys(&checks[0]), ["check", "closed_form", "mc_mean", "pass", "stderr"]);
}

#[test]
fn mc_verify_reports_failed_checks() {
    // two grid steps per path grossly understate the maxima
    let out = run(&[
        "mc-verify", "--paths", "5000", "--steps", "2", "--seed", "1", "--suite", "extrema", "--refinement",
        "grid",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v.as_array().unwrap().iter().any(|c| c["pass"] == false));
}

#[test]
fn laplace_verify_default_grid_passes() {
    let out = run(&["laplace-verify", "--theta", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let checks = v.as_array().unwrap();
    assert_eq!(checks.len(), 6 * 15);
    assert_eq!(keys(&checks[0]), ["kind", "pass", "residual", "x"]);
    assert!(checks.iter().all(|c| c["residual"].as_f64().unwrap().abs() < 1e-6));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["frobnicate"][..],
        &["eval", "--dist", "ks"],
        &["eval", "--dist", "ks", "--at", "1", "--bogus"],
        &["eval", "--dist", "ks", "--at", "-1"],
        &["eval", "--dist", "ks", "--at", "1", "--tol", "0"],
        &["laplace-verify", "--theta", "0"],
        &["laplace-verify", "--theta", "1", "--grid", "1:0:0.1"],
        &["mc-verify", "--paths", "1", "--steps", "16", "--seed", "0"],
        &["mc-verify", "--paths", "10", "--steps", "16", "--seed", "-3"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn series_failure_exits_with_one() {
    let out = run(&["eval", "--dist", "diff", "--at", "0.001"]);
    assert_eq!(out.status.code(), Some(1));
    let ok = run(&["eval", "--dist", "diff", "--at", "0.001", "--max-terms", "100000"]);
    assert_eq!(ok.status.code(), Some(0));
}
