//! End-to-end tests of the command-line contract: envelope shape, exit
//! codes, flag/file/default precedence, and output files.

use std::path::Path;
use std::process::{Command, Output};

fn hexcluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexcluster"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is one JSON envelope")
}

fn write_wire_pattern(dir: &Path) -> String {
    let path = dir.join("wire.json");
    std::fs::write(&path, "{\"builtin\": \"wire\"}\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn passing_check_exits_zero_with_envelope() {
    let output = hexcluster(&["ham", "ground-check", "--rows", "1", "--cols", "2"]);
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stderr.is_empty());
    let envelope = stdout_json(&output);
    assert_eq!(envelope["config"]["command"], "ham ground-check");
    assert_eq!(envelope["config"]["rows"], 1);
    assert_eq!(envelope["config"]["flavor"], "projector");
    assert_eq!(envelope["config"]["tol"], 1e-10);
    assert_eq!(envelope["reports"][0]["name"], "ground-check");
    assert_eq!(envelope["reports"][0]["pass"], true);
    assert_eq!(envelope["pass"], true);
}

#[test]
fn failing_check_exits_one_and_names_the_check() {
    let output = hexcluster(&[
        "ham",
        "ground-check",
        "--rows",
        "1",
        "--cols",
        "2",
        "--flavor",
        "spin",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr.clone()).unwrap();
    assert!(
        stderr.contains("failed checks: ground-check"),
        "stderr was: {stderr}"
    );
    let envelope = stdout_json(&output);
    // The spin flavor gets the looser default tolerance and still fails.
    assert_eq!(envelope["config"]["tol"], 1e-8);
    assert_eq!(envelope["pass"], false);
}

#[test]
fn usage_errors_exit_two() {
    let bad_tol = hexcluster(&["ham", "ground-check", "--tol", "0"]);
    assert_eq!(bad_tol.status.code(), Some(2));
    let stderr = String::from_utf8(bad_tol.stderr).unwrap();
    assert!(
        stderr.contains("--tol must be positive"),
        "stderr was: {stderr}"
    );

    let bad_flavor = hexcluster(&["ham", "ground-check", "--flavor", "bogus"]);
    assert_eq!(bad_flavor.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{\"rows\": 1, \"colour\": 3}\n").unwrap();
    let unknown_key = hexcluster(&["state", "build", "--config", config.to_str().unwrap()]);
    assert_eq!(unknown_key.status.code(), Some(2));

    let bad_threads = Command::new(env!("CARGO_BIN_EXE_hexcluster"))
        .args(["state", "build", "--rows", "1", "--cols", "2"])
        .env("TRICLUSTER_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
    let stderr = String::from_utf8(bad_threads.stderr).unwrap();
    assert!(
        stderr.contains("TRICLUSTER_THREADS"),
        "stderr was: {stderr}"
    );
}

#[test]
fn resource_errors_exit_three() {
    let missing_config = hexcluster(&["state", "build", "--config", "/nonexistent/config.json"]);
    assert_eq!(missing_config.status.code(), Some(3));

    let missing_pattern = hexcluster(&["mbqc", "run", "/nonexistent/pattern.json"]);
    assert_eq!(missing_pattern.status.code(), Some(3));

    let over_budget = hexcluster(&[
        "state",
        "build",
        "--rows",
        "2",
        "--cols",
        "3",
        "--budget-bytes",
        "1000",
    ]);
    assert_eq!(over_budget.status.code(), Some(3));
    let stderr = String::from_utf8(over_budget.stderr).unwrap();
    assert!(stderr.contains("error:"), "stderr was: {stderr}");
}

#[test]
fn state_build_writes_a_readable_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.bin");
    let output = hexcluster(&[
        "state",
        "build",
        "--rows",
        "1",
        "--cols",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let envelope = stdout_json(&output);
    assert_eq!(
        envelope["reports"][0]["report"]["written"],
        path.to_str().unwrap()
    );

    let mut file = std::fs::File::open(&path).unwrap();
    let state = hexcluster::serialize::read_state(&mut file).unwrap();
    assert_eq!(state.dims, vec![6, 6, 6]);
    assert!(state.norm > 0.0);
    let weight: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    assert!((weight - 1.0).abs() < 1e-12);
}

#[test]
fn other_commands_copy_the_envelope_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("envelope.json");
    let output = hexcluster(&[
        "ham",
        "spectrum",
        "--rows",
        "1",
        "--cols",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let copied = std::fs::read(&path).unwrap();
    // stdout is the same text plus the trailing newline from printing.
    assert_eq!(output.stdout, [copied, b"\n".to_vec()].concat());
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{\"rows\": 1, \"cols\": 3, \"seed\": 9}\n").unwrap();
    let output = hexcluster(&[
        "ham",
        "spectrum",
        "--config",
        config.to_str().unwrap(),
        "--cols",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let envelope = stdout_json(&output);
    assert_eq!(envelope["config"]["rows"], 1);
    assert_eq!(envelope["config"]["cols"], 2);
    assert_eq!(envelope["config"]["seed"], 9);
}

#[test]
fn postselection_pins_every_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = write_wire_pattern(dir.path());

    let output = hexcluster(&["mbqc", "run", &pattern, "--post", "2,0,1"]);
    assert_eq!(output.status.code(), Some(0));
    let envelope = stdout_json(&output);
    let measurements = envelope["reports"][0]["report"]["measurements"]
        .as_array()
        .unwrap();
    let outcomes: Vec<u64> = measurements
        .iter()
        .map(|m| m["outcome"].as_u64().unwrap())
        .collect();
    assert_eq!(outcomes, vec![2, 0, 1]);

    let wrong_length = hexcluster(&["mbqc", "run", &pattern, "--post", "2,0"]);
    assert_eq!(wrong_length.status.code(), Some(2));
}

#[test]
fn thread_cap_env_is_accepted() {
    let output = Command::new(env!("CARGO_BIN_EXE_hexcluster"))
        .args(["state", "build", "--rows", "1", "--cols", "2"])
        .env("TRICLUSTER_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
}
