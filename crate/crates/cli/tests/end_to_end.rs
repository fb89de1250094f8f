//! Drives the installed binary the way a user would: subcommands,
//! flags, exit codes, and the files left behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bellbias_cli::{EXIT_CONFIG, EXIT_GATES};

fn bellbias() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bellbias"))
}

fn write_config(dir: &Path, value: serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_vec(&value).unwrap()).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "seed": 9,
            "protocol": {"kind": "fixed_state", "label": "psi-", "trials": 2_000},
        }),
    );
    let out_dir = dir.path().join("out");
    let output = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let events = fs::read_to_string(out_dir.join("events.csv")).unwrap();
    assert!(events.starts_with("trial,protocol,prep,m,a,b,A,B,kept,hopper\n"));
    assert_eq!(events.lines().count(), 2_001);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 9);
    assert_eq!(summary["seed_generated"], false);
    assert!(stdout(&output).contains("gate "));
}

#[test]
fn unknown_config_key_exits_two_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "protocol": {"kind": "fixed_state", "label": "psi-", "mislabeled": true},
        }),
    );
    let out_dir = dir.path().join("out");
    let output = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&output).contains("mislabeled"), "{}", stderr(&output));
    assert!(!out_dir.exists(), "nothing may be written on a config error");
}

#[test]
fn missing_config_file_exits_two() {
    let output = bellbias()
        .args(["run", "--config", "/nonexistent/nowhere.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn config_with_both_jobs_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "protocol": {"kind": "random_state"},
            "gallery": {"kind": "clinic"},
        }),
    );
    let output = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&output).contains("exactly one"), "{}", stderr(&output));
}

#[test]
fn gate_failures_exit_three_only_when_enforced() {
    // two trials cannot populate the strata, so statistical gates fail
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "seed": 1,
            "protocol": {"kind": "random_state", "trials": 2},
        }),
    );
    let relaxed = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert_eq!(relaxed.status.code(), Some(0), "{}", stderr(&relaxed));
    assert!(stdout(&relaxed).contains("FAIL"));
    let enforced = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("b"))
        .arg("--gates")
        .output()
        .unwrap();
    assert_eq!(enforced.status.code(), Some(EXIT_GATES));
    // outputs are still written so the failure can be inspected
    assert!(dir.path().join("b").join("summary.json").exists());
}

#[test]
fn worker_count_never_changes_the_events_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "seed": 33,
            "protocol": {"kind": "hopper_sort", "trials": 5_000},
        }),
    );
    let mut bytes = Vec::new();
    for threads in ["1", "5"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let output = bellbias()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out_dir)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
        bytes.push(fs::read(out_dir.join("events.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn summary_echo_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "seed": 21,
            "protocol": {
                "kind": "swap",
                "geometry": "future",
                "trials": 4_000,
                "settings": {"kind": "single", "a": 0.3, "b": 0.3},
            },
        }),
    );
    let first_out = dir.path().join("first");
    let output = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&first_out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first_out.join("summary.json")).unwrap()).unwrap();
    let echo_path = dir.path().join("echo.json");
    fs::write(&echo_path, serde_json::to_vec(&summary["config"]).unwrap()).unwrap();
    let second_out = dir.path().join("second");
    let output = bellbias()
        .args(["run", "--config"])
        .arg(&echo_path)
        .arg("--out")
        .arg(&second_out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert_eq!(
        fs::read(first_out.join("events.csv")).unwrap(),
        fs::read(second_out.join("events.csv")).unwrap()
    );
}

#[test]
fn flag_overrides_reach_the_echo() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "seed": 4,
            "protocol": {"kind": "random_state", "trials": 50_000},
        }),
    );
    let out_dir = dir.path().join("out");
    let output = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--seed", "77", "--trials", "1500"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 77);
    assert_eq!(summary["config"]["seed"], 77);
    assert_eq!(summary["config"]["protocol"]["trials"], 1500);
    let events = fs::read_to_string(out_dir.join("events.csv")).unwrap();
    assert_eq!(events.lines().count(), 1501);
}

#[test]
fn a_missing_seed_is_generated_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        serde_json::json!({
            "version": 1,
            "protocol": {"kind": "fixed_state", "label": "phi+", "trials": 50},
        }),
    );
    let output = bellbias()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(stderr(&output).contains("generated master seed"));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out").join("summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["seed_generated"], true);
    assert!(summary["config"]["seed"].is_u64());
}

#[test]
fn oracle_subcommand_prints_the_exact_table() {
    let output = bellbias()
        .args(["oracle", "--label", "psi-", "--a", "0", "--b", "0"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("P(A=+1, B=+1) = 0.00000000000e0"), "{text}");
    assert!(text.contains("E = -1.00000000000e0"), "{text}");
    let bad = bellbias()
        .args(["oracle", "--label", "omega", "--a", "0", "--b", "0"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn combos_subcommand_lists_impossible_tuples() {
    let output = bellbias()
        .args(["combos", "--geometry", "past", "--a-grid", "0", "--b-grid", "0"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.starts_with("8 zero-probability combinations:"), "{text}");
    assert!(text.contains("m=psi-"));
    let none = bellbias()
        .args(["combos", "--geometry", "future", "--a-grid", "0", "--b-grid", "1.5707963267948966"])
        .output()
        .unwrap();
    assert_eq!(
        stdout(&none),
        "no zero-probability combinations on this grid\n"
    );
}

#[test]
fn gallery_subcommand_runs_with_gates() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let output = bellbias()
        .args(["gallery", "survivorship", "--seed", "3", "--trials", "20000", "--gates"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(out_dir.join("events.csv").exists());
    assert!(out_dir.join("details.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["job"], "survivorship");
    assert_eq!(summary["config"]["gallery"]["sorties"], 20000);
    assert_eq!(summary["gates_passed"], true);
    let unknown = bellbias().args(["gallery", "zoo"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn digit_parity_gallery_emits_parity_events() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let output = bellbias()
        .args(["gallery", "digit_parity", "--trials", "200"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let events = fs::read_to_string(out_dir.join("events.csv")).unwrap();
    let second = events.lines().nth(1).unwrap();
    // pi starts 1,4: odd then even on side A; e starts 7,1: odd
    assert_eq!(second, "0,digit_parity,,,,,+1,+1,false,");
    let details = fs::read_to_string(out_dir.join("details.csv")).unwrap();
    assert!(details.starts_with("position,digit_a,digit_b,in_s\n0,1,7,false\n1,4,1,true\n"));
}
