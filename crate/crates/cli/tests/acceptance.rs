//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1-9 run through the library; 10 replays every bundled config
//! through the binary with 1, 2 and 8 workers and compares stdout and the
//! `--out` directory byte for byte.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use gmeasure::validation::{run_criterion, ValidationOptions, CRITERIA};

const CONFIG_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
const WORKERS: [&str; 3] = ["1", "2", "8"];

type Snapshot = (Vec<u8>, Option<i32>, Vec<(String, Vec<u8>)>);

fn snapshot(command: &str, name: &str, workers: &str) -> Snapshot {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gmeasure"))
        .args([command, "--config", &format!("@{name}"), "--workers", workers])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    (out.stdout, out.status.code(), files(dir.path()))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = match std::fs::read_dir(dir) {
        Ok(rd) => rd
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

fn criterion10() -> (bool, String) {
    let mut names: Vec<_> = std::fs::read_dir(CONFIG_DIR)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let mut mismatched = Vec::new();
    let mut files_compared = 0;
    for path in &names {
        let cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let command = cfg["command"].as_str().unwrap();
        let name = path.file_stem().unwrap().to_str().unwrap();
        let runs: Vec<Snapshot> = WORKERS.iter().map(|w| snapshot(command, name, w)).collect();
        files_compared += runs[0].2.len();
        if runs.iter().any(|r| *r != runs[0]) {
            mismatched.push(name.to_string());
        }
    }
    let summary = format!(
        "{} bundled configs x workers {:?}, {} output files each; mismatched: {:?}",
        names.len(),
        WORKERS,
        files_compared,
        mismatched
    );
    (mismatched.is_empty(), summary)
}

fn main() -> ExitCode {
    let opts = ValidationOptions::default();
    let mut failed = 0;
    for id in CRITERIA {
        let start = Instant::now();
        let (passed, summary) = match run_criterion(id, &opts) {
            Ok(r) => (r.passed, r.summary),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !passed as usize;
        println!("{} criterion {id}: {summary} ({:.1} s)", if passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    let start = Instant::now();
    let (passed, summary) = criterion10();
    failed += !passed as usize;
    println!("{} criterion 10: {summary} ({:.1} s)", if passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
