use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn streammode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streammode"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_streammode"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn final_estimate(v: &Value) -> Vec<f64> {
    v["final_estimate"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&streammode(&["--help"])), 0);
    assert_eq!(code(&streammode(&[])), 1);
    assert_eq!(code(&streammode(&["frobnicate"])), 1);
    assert_eq!(code(&streammode(&["simulate", "--epsilon", "wide"])), 1);
}

#[test]
fn constant_stream_settles_on_the_constant() {
    let input = "7.0\n".repeat(2000);
    let v = json(&with_stdin(&["estimate"], &input));
    let m = final_estimate(&v);
    assert!((m[0] - 7.0).abs() < 1e-3, "{m:?}");
    assert_eq!(v["samples"], 2000);
    assert_eq!(v["updates"], 1000);
}

#[test]
fn empty_input_is_a_data_error() {
    let out = with_stdin(&["estimate"], "# only a comment\n\n");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no samples"), "{}", stderr(&out));
}

#[test]
fn malformed_row_reports_its_line() {
    let mut input = "1.0\n".repeat(5);
    input.push_str("oops\n");
    let out = with_stdin(&["estimate"], &input);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 6"), "{}", stderr(&out));

    let out = with_stdin(&["estimate"], "1 2\n3\n");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn short_stream_cannot_finish_warmup() {
    let out = with_stdin(&["estimate"], &"1.0\n".repeat(10));
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn invalid_plans_are_config_errors() {
    assert_eq!(code(&streammode(&["simulate", "--runs", "1", "--samples", "0"])), 1);
    assert_eq!(code(&streammode(&["replicate", "--runs", "0", "--samples", "2000"])), 1);
    assert_eq!(code(&streammode(&["simulate", "--epsilon", "-1"])), 1);
    assert_eq!(code(&streammode(&["simulate", "--distribution", "cauchy"])), 1);
    assert_eq!(code(&streammode(&["simulate", "--a0", "2"])), 1);
    assert_eq!(code(&streammode(&["simulate", "--warmup", "0", "--samples", "100"])), 1);
}

#[test]
fn sampled_stream_replays_the_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("samples.txt");
    let args = ["--distribution", "gamma", "--samples", "5000", "--seed", "42"];
    let mut sample = vec!["sample", "-o", path(&file)];
    sample.extend(args);
    assert_eq!(code(&streammode(&sample)), 0);

    let mut estimate = vec!["estimate", path(&file)];
    estimate.extend(args);
    let mut simulate = vec!["simulate"];
    simulate.extend(args);
    let from_file = json(&streammode(&estimate));
    let simulated = json(&streammode(&simulate));
    assert_eq!(final_estimate(&from_file), final_estimate(&simulated));
    assert_eq!(from_file["updates"], simulated["updates"]);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    fs::write(&file, "[estimator]\nlambda = 1e-5\nlamda = 3\n").unwrap();
    let out = streammode(&["simulate", "--config", path(&file)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("lamda"), "{}", stderr(&out));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    fs::write(
        &file,
        "[estimator]\nlambda = 0.5\n\n[experiment]\nn_samples = 3000\nbase_seed = 9\n",
    )
    .unwrap();
    let v = json(&streammode(&["simulate", "--config", path(&file), "--lambda", "0.001"]));
    assert_eq!(v["config"]["estimator"]["lambda"], 0.001);
    assert_eq!(v["config"]["experiment"]["n_samples"], 3000);
    assert_eq!(v["seed"], 9);
}

#[test]
fn artifacts_are_written_to_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested/out");
    let v = json(&streammode(&[
        "simulate",
        "--samples",
        "3000",
        "--trace-every",
        "500",
        "--out",
        path(&out_dir),
    ]));
    let run: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(run, v);
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "n,m_1");
    assert_eq!(lines.len(), 1 + 4);
    let last: Vec<f64> = lines[4].split(',').map(|t| t.parse().unwrap()).collect();
    assert_eq!(last[0], 2000.0);
    assert_eq!(last[1..], final_estimate(&v)[..]);
}

#[test]
fn replicate_with_initial_points_writes_labeled_traces() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&streammode(&[
        "replicate",
        "--samples",
        "2000",
        "--runs",
        "3",
        "--warmup",
        "0",
        "--initial",
        "5",
        "--initial",
        "15",
        "--out",
        path(dir.path()),
    ]));
    assert_eq!(v["per_run_final"].as_array().unwrap().len(), 3);
    assert_eq!(v["trajectories"].as_array().unwrap().len(), 2);
    assert!(v.get("wall_time_s").is_none());
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("label,n,m_1\nm0=5,0,5\n"), "{trace}");
    assert!(trace.contains("\nm0=15,0,15\n"));
}

#[test]
fn verify_passes_on_the_normal_reference() {
    let v = json(&streammode(&["verify"]));
    assert_eq!(v["passed"], true);
    let statuses: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["status"].as_str().unwrap())
        .collect();
    assert!(statuses.iter().all(|s| *s == "pass"), "{statuses:?}");
}

#[test]
fn runaway_iterates_exit_with_divergence() {
    let out = streammode(&[
        "simulate",
        "--lambda",
        "1e6",
        "--schedule",
        "polynomial-decay",
        "--a0",
        "1e6",
        "--n0",
        "0",
        "--gamma",
        "1",
        "--warmup",
        "0",
        "--initial",
        "5",
        "--samples",
        "10",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn unwritable_output_is_an_output_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = streammode(&["simulate", "--samples", "2000", "--out", path(&blocker.join("sub"))]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}
