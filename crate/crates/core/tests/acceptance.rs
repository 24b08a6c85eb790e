//! The acceptance battery: one PASS/FAIL line per criterion.
//!
//! Thresholds live in `riccilab::suite`; this harness adds the wall-clock
//! limits and the end-to-end determinism check through the binary.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use riccilab::suite::{run_criterion, SuiteOptions, CRITERIA};

/// Wall-clock limits in seconds where the criterion states one.
fn runtime_limit(id: u8) -> Option<f64> {
    match id {
        1 => Some(10.0),
        2 => Some(60.0),
        3 => Some(120.0),
        6 => Some(600.0),
        _ => None,
    }
}

/// Written straight to stderr so the lines survive the harness's capture.
fn emit(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn run_binary_suite(dir: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_riccilab"))
        .args(["--seed", "0", "--format", "json", "--out-dir"])
        .arg(dir)
        .arg("suite")
        .stdout(Stdio::null())
        .status()
        .expect("run riccilab suite");
    assert_eq!(status.code(), Some(0), "suite binary exit status");
    std::fs::read(dir.join("suite.json")).expect("suite report")
}

#[test]
fn acceptance_criteria() {
    let opts = SuiteOptions::default();
    let mut failures = Vec::new();
    for (id, title) in CRITERIA {
        let started = Instant::now();
        let result = run_criterion(id, &opts);
        let mut elapsed = started.elapsed();
        let (mut pass, mut detail) = match &result {
            Ok(rep) => (rep.pass, rep.metrics.to_string()),
            Err(e) => (false, format!("error: {e}")),
        };
        if id == 9 {
            // end to end: two runs of the full battery through the binary
            let started = Instant::now();
            let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
            let identical = run_binary_suite(a.path()) == run_binary_suite(b.path());
            elapsed += started.elapsed();
            pass &= identical;
            detail = format!("{detail} binary_rerun_identical={identical}");
        }
        if let Some(limit) = runtime_limit(id) {
            if elapsed > Duration::from_secs_f64(limit) {
                pass = false;
                detail = format!("{detail} runtime {:.1}s exceeds {limit}s", elapsed.as_secs_f64());
            }
        }
        if detail.len() > 400 {
            let mut cut = 400;
            while !detail.is_char_boundary(cut) {
                cut -= 1;
            }
            detail.truncate(cut);
            detail.push_str("...");
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        emit(&format!(
            "{verdict} criterion {id} ({title}) [{:.1}s] {detail}",
            elapsed.as_secs_f64()
        ));
        if !pass {
            failures.push(id);
        }
    }
    assert!(failures.is_empty(), "failing criteria: {failures:?}");
}
