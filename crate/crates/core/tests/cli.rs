use std::path::Path;
use std::process::{Command, Output};

use uldp::harness::{read_records, RunMetadata, METADATA_FILE, RECORDS_FILE, SUMMARY_FILE};

fn uldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uldp"))
        .args(args)
        .output()
        .unwrap()
}

fn write_spec(dir: &Path, out: &Path) -> std::path::PathBuf {
    let spec = serde_json::json!({
        "schema_version": 1, "task": "mean1d", "distribution": {"name": "uniform"},
        "grid": {"n": [200, 2000, 20000], "m": [20], "epsilon": [1.0]},
        "trials": 6, "seed": 3, "output": out
    });
    let path = dir.join("spec.json");
    std::fs::write(&path, spec.to_string()).unwrap();
    path
}

#[test]
fn sweep_writes_outputs_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = write_spec(dir.path(), &out);
    let first = uldp(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    for f in [RECORDS_FILE, SUMMARY_FILE, METADATA_FILE] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let meta: RunMetadata =
        serde_json::from_str(&std::fs::read_to_string(out.join(METADATA_FILE)).unwrap()).unwrap();
    assert_eq!((meta.records, meta.failed), (18, 0));
    assert_eq!(read_records(&out.join(RECORDS_FILE)).unwrap().len(), 18);

    let again = Command::new(env!("CARGO_BIN_EXE_uldp"))
        .args(["sweep", "--config", config.to_str().unwrap()])
        .env("ULDP_WORKERS", "2")
        .output()
        .unwrap();
    assert!(again.status.success());
    let meta2: RunMetadata =
        serde_json::from_str(&std::fs::read_to_string(out.join(METADATA_FILE)).unwrap()).unwrap();
    assert_eq!(meta.determinism_hash, meta2.determinism_hash);

    let fit = uldp(&["fit", "--out", out.to_str().unwrap(), "--x", "n"]);
    assert!(fit.status.success());
    let v: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert!(v["slope"].as_f64().unwrap() < -0.5);
}

#[test]
fn task_subcommand_with_overrides() {
    let out = uldp(&["mean1d", "--n", "500,1000", "--m", "10", "--trials", "2"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("squared_error"));
}

#[test]
fn exit_codes() {
    assert_eq!(uldp(&["sweep"]).status.code(), Some(2));
    assert_eq!(uldp(&["mean1d", "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(
        uldp(&["fit", "--out", "/nonexistent/records.jsonl"])
            .status
            .code(),
        Some(1)
    );
    let audit = uldp(&[
        "audit",
        "--eps",
        "1",
        "--trials",
        "100000",
        "--noise-multiplier",
        "0.5",
    ]);
    assert_eq!(audit.status.code(), Some(3));
    let audit = uldp(&["audit", "--eps", "1", "--trials", "100000"]);
    assert_eq!(audit.status.code(), Some(0));
}

#[test]
fn infeasible_points_become_error_rows() {
    let out = uldp(&["mean1d", "--n", "2,400", "--m", "5", "--trials", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed"));
}
