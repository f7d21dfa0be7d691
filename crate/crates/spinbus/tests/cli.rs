//! The `spinbus` binary: exit codes, stderr on failure and the files a run writes.

use std::path::Path;
use std::process::{Command, Output};

fn spinbus(args: &[&str], env_workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinbus"));
    cmd.args(args).env("RUST_LOG", "warn");
    match env_workers {
        Some(w) => cmd.env("SPINBUS_WORKERS", w),
        None => cmd.env_remove("SPINBUS_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const QUICK: &str = r#"
[params]
kappa_z = 5e-6

[landscape]
source = "flat"
splitting = 0.1

[optimizer]
max_iterations = 2

[single]
x0 = 10.0
tg = 6.0
"#;

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[params]\nkapa_z = 1e-6\n");
    let out = spinbus(&["optimize-one", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kapa_z"));
}

#[test]
fn missing_config_is_a_config_error() {
    let out = spinbus(&["grid-sweep", "--config", "/nonexistent/spinbus.toml"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn mismatched_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "experiment = \"ensemble\"\n");
    let out = spinbus(&["grid-sweep", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_worker_env_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", QUICK);
    let out = spinbus(&["optimize-one", "--config", &cfg, "--out", dir.path().to_str().unwrap()], Some("many"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn off_landscape_center_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = QUICK.replace("splitting = 0.1", "splitting = 0.1\nlength = 20.0\ncenter = 15.0");
    let cfg = write(dir.path(), "c.toml", &text);
    let out = spinbus(&["optimize-one", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stderr.is_empty());
}

#[test]
fn optimize_one_writes_records_pulse_and_trace_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", QUICK);
    let out_dir = dir.path().join("run");
    let out = spinbus(&["optimize-one", "--config", &cfg, "--seed", "4", "--out", out_dir.to_str().unwrap()], Some("1"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["records.jsonl", "summary.json", "pulse.json", "trace.jsonl"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let records = out_dir.join("records.jsonl");
    let out = spinbus(&["verify", "--config", &cfg, "--records", records.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
