use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antichains")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn constants_file() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/constants.json"))
}

#[test]
fn count_reports_980() {
    let out = run(&["count", "--t", "3", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["count"], "980");
    assert_eq!(v["result"]["agree"], true);
    assert_eq!(v["config"]["seed"], 2024);
    assert_eq!(v["constants_version"], "1.0.0");
}

#[test]
fn identities_at_n2() {
    let out = run(&["identities", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows[0]["antichains"], "18");
    assert_eq!(rows[0]["partition_function"], "9/4");
    assert!(rows.iter().all(|r| r["holds"] == true));
}

#[test]
fn usage_and_refusals_exit_2() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["identities", "--n", "2", "--format", "csv"]).status.code(), Some(2));
    let out = run(&["count", "--t", "1", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(run(&["kp", "--n", "6", "--constants-file", "/nonexistent/constants.json"]).status.code(), Some(2));
}

#[test]
fn sampler_output_is_deterministic() {
    let args = ["clt-sim", "--n", "2", "--samples", "3000", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["result"]["stats"]["seed"], 7);
    assert_eq!(v["result"]["stats"]["burn_in"], 350);
}

#[test]
fn llt_csv_table() {
    let out = run(&["llt", "--t", "3", "--n", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,n,j,exact,estimate,abs_error,n_abs_error"));
    assert_eq!(lines.count(), 21);
}

#[test]
fn clusters_match_closed_forms() {
    let out = run(&["clusters", "--n", "3", "--n-max", "4", "--cluster-size-max", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"][0]["sum"], "9/4");
    assert!(v["result"].as_array().unwrap().iter().all(|r| r["matches"] == true));
}

#[test]
fn kp_reads_published_constants() {
    // At n = 8 the truncated sums are far above the target, so the verdict is FAIL.
    let file = constants_file();
    let out = run(&["kp", "--n", "8", "--constants-file", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    assert_eq!(v["result"]["constants"]["version"], "1.0.0");
    assert_eq!(v["result"]["anchors"].as_array().unwrap().len(), 12);
}

#[test]
fn constants_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = run(&["constants", "--constants-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let fresh: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let published: Value = serde_json::from_str(&std::fs::read_to_string(constants_file()).unwrap()).unwrap();
    assert_eq!(fresh, published);
}

#[test]
fn scd_and_containers_pass() {
    assert_eq!(run(&["scd", "--t", "4", "--n", "3"]).status.code(), Some(0));
    let out = run(&["containers", "--n", "5", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"][0]["audit"]["codegree"], 1);
}
