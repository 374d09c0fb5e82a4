use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gmeasure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmeasure")).args(args).output().unwrap()
}

fn doc(out: &Output) -> Value {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut stream = serde_json::Deserializer::from_str(&text).into_iter::<Value>();
    let v = stream.next().expect("no JSON on stdout").unwrap();
    assert!(stream.next().is_none(), "more than one JSON document on stdout");
    v
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn check_criterium_reports_verdict() {
    let out = gmeasure(&["check-criterium", "--config", "@corollary2"]);
    assert_eq!(code(&out), 0);
    let v = doc(&out);
    assert!(v["verdict"].is_string(), "{v}");
}

#[test]
fn alpha_other_than_one_eighth_is_a_config_error() {
    let out = gmeasure(&["check-criterium", "--config", "@alpha_rejected"]);
    assert_eq!(code(&out), 2);
    let v = doc(&out);
    assert_eq!(v["exit_code"], 2);
    assert_eq!(v["error"]["class"], "config");
}

#[test]
fn unknown_flag_still_prints_json() {
    let out = gmeasure(&["simulate", "--bogus"]);
    assert_eq!(code(&out), 2);
    assert_eq!(doc(&out)["error"]["kind"], "Usage");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = gmeasure(&["exact", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code(&out), 2);
    doc(&out);
}

#[test]
fn config_for_another_command_is_rejected() {
    let out = gmeasure(&["simulate", "--config", "@corollary1"]);
    assert_eq!(code(&out), 2);
    doc(&out);
}

#[test]
fn scan_overflow_exits_three() {
    let out = gmeasure(&["simulate", "--config", "@simulate_overflow"]);
    assert_eq!(code(&out), 3);
    let v = doc(&out);
    assert_eq!(v["error"]["kind"], "ScanOverflow");
    assert!(v["error"]["cap"].is_u64());
}

#[test]
fn precondition_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("probe.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "command": "probe-transition",
            "params": {"epsilon": "1/4", "weights": {"kind": "corollary1"}, "orders": [3, 5]},
            "order_cap": 2, "horizon": 10, "n": 10}"#,
    )
    .unwrap();
    let out = gmeasure(&["probe-transition", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(doc(&out)["error"]["class"], "precondition");
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_is_reproducible_and_writes_trajectories() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, workers: &str| {
        gmeasure(&["simulate", "--config", "@simulate_lower2", "--seed", "5", "--workers", workers, "--out", dir.to_str().unwrap()])
    };
    let (x, y) = (run(a.path(), "1"), run(b.path(), "4"));
    assert_eq!(code(&x), 0);
    assert_eq!(x.stdout, y.stdout);
    let files = read_dir_sorted(a.path());
    assert_eq!(files, read_dir_sorted(b.path()));
    assert!(files.iter().any(|(n, _)| n == "trajectory.csv"));
    assert!(files.iter().any(|(_, bytes)| bytes.starts_with(b"GMT1")));

    let other = gmeasure(&["simulate", "--config", "@simulate_lower2", "--seed", "6"]);
    assert_ne!(doc(&x)["plus_fraction"], Value::Null);
    assert_ne!(x.stdout, other.stdout);
}

#[test]
fn results_csv_upserts_by_experiment_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for seed in ["1", "1", "2"] {
        let out = gmeasure(&["dbar", "--config", "@dbar_order0", "--n", "200", "--seed", seed, "--out", d]);
        assert_eq!(code(&out), 0);
    }
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
}

#[test]
fn gen_params_round_trips_into_check_criterium() {
    let dir = tempfile::tempdir().unwrap();
    let out = gmeasure(&["gen-params", "--family", "corollary2", "--c", "7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = doc(&out);
    assert!(v["params"].is_object(), "{v}");
}

#[test]
fn validate_single_criterion() {
    let out = gmeasure(&["validate", "--criterion", "3"]);
    assert_eq!(code(&out), 0);
    let v = doc(&out);
    assert_eq!(v["criteria"][0]["passed"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS criterion 3"));
}
