//! Runner and helpers for the `acceptance` test target.
//!
//! Criteria run one after another and each prints exactly one
//! `PASS <label>: ...` or `FAIL <label>: ...` line. A criterion that panics
//! counts as a failure. The process exits non-zero if anything failed.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

pub type Criterion = (&'static str, fn() -> Verdict);

pub fn run(criteria: &[Criterion]) -> ExitCode {
    let mut failed = 0;
    for (label, check) in criteria {
        let started = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        if !verdict.passed {
            failed += 1;
        }
        println!(
            "{} {label}: {} [{:.1} s]",
            if verdict.passed { "PASS" } else { "FAIL" },
            verdict.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Informational line that never fails.
pub fn note(label: &str, detail: impl std::fmt::Display) {
    println!("INFO {label}: {detail}");
}

/// Build the `streammode` binary with the profile the tests were built
/// with and return its path. Cargo is a no-op when it is already fresh.
pub fn streammode_binary() -> PathBuf {
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let profile = if cfg!(debug_assertions) { "test" } else { "release" };
    let out = Command::new(cargo)
        .args(["build", "--quiet", "--message-format=json", "--profile", profile])
        .args(["-p", "streammode", "--bin", "streammode"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("cargo runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .find_map(|v| v["executable"].as_str().map(PathBuf::from))
        .expect("cargo reports the executable")
}

/// Component-wise `|a - b|` maximum.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
