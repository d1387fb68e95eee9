//! End-to-end runs of the `metastab` binary against the shipped configs:
//! exit-code contract, report layout, byte determinism, and the cap
//! environment override.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metastab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn counterexample_config_exits_zero() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(config("counterexample.json"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = std::fs::read_to_string(out.path().join("report.json")).unwrap();
    assert!(report.contains("l1_shift_counterexample"));
    assert!(report.contains("\"exit_code\": 0"));
}

#[test]
fn browder_config_runs_and_reports_deterministically() {
    let out1 = tempfile::tempdir().unwrap();
    let out2 = tempfile::tempdir().unwrap();
    for out in [&out1, &out2] {
        let status = bin()
            .args(["run", "--budget", "400", "--config"])
            .arg(config("browder_rotation.json"))
            .arg("--out")
            .arg(out.path())
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for name in ["report.json", "rows.csv", "series.csv"] {
        let a = std::fs::read(out1.path().join(name)).unwrap();
        let b = std::fs::read(out2.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} not byte-identical across runs");
    }
    let rows = std::fs::read_to_string(out1.path().join("rows.csv")).unwrap();
    let mut lines = rows.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,k,f,bound,witnessN,maxGap,verdict,marginsJSON,ms"
    );
    // 5 k's × 3 f's.
    assert_eq!(lines.count(), 15);
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{
            "schema_version": 1,
            "scheme": "browder",
            "space": {"dim": 2, "b": 0, "body": {"kind": "ball", "center": [0.0,0.0], "radius": 0.5}},
            "operator": {"kind": "identity"},
            "anchor": [0.0, 0.0],
            "k_list": [0],
            "f_list": [{"kind": "identity"}],
            "budget": 10
        }"#,
    )
    .unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bounds_subcommand_prints_bound_json() {
    let out = bin()
        .args([
            "bounds",
            "--name",
            "beta_browder",
            "--args",
            r#"[0, {"kind":"identity"}]"#,
            "--params",
            r#"{"b":1}"#,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        r#"{"exact":"66495792"}"#
    );
}

#[test]
fn cap_env_var_overrides_default() {
    let out = bin()
        .env("METASTAB_CAP", "10000")
        .args([
            "bounds",
            "--name",
            "beta_browder",
            "--args",
            r#"[0, {"kind":"identity"}]"#,
            "--params",
            r#"{"b":1}"#,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        r#"{"saturated_at":"10000"}"#
    );
    // The explicit flag wins over the environment.
    let out = bin()
        .env("METASTAB_CAP", "10000")
        .args([
            "bounds",
            "--cap",
            "100000000",
            "--name",
            "beta_browder",
            "--args",
            r#"[0, {"kind":"identity"}]"#,
            "--params",
            r#"{"b":1}"#,
        ])
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        r#"{"exact":"66495792"}"#
    );
}

#[test]
fn oracle_subcommand_reports_witnesses() {
    let out = bin()
        .args(["oracle", "--budget", "300", "--config"])
        .arg(config("browder_rotation.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("oracle output is JSON");
    let arr = parsed.as_array().unwrap();
    assert_eq!(arr.len(), 15);
    assert!(arr.iter().all(|w| w["witness_n"].is_u64()));
}

#[test]
fn validate_moduli_subcommand_passes() {
    let out = bin()
        .args(["validate-moduli", "--ell", "2", "--b", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let arr = parsed.as_array().unwrap();
    assert_eq!(arr.len(), 3);
    assert!(arr.iter().all(|r| r["verdict"] == "pass"));
}
