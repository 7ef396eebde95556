//! End-to-end CLI behavior: exit codes, config overrides, and the built-in
//! oracle battery.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minorlab"))
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("minorlab_cli_{}_{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn missing_config_is_a_config_error() {
    let out = bin().arg("tails").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_config_error() {
    let d = tmp_dir("bad");
    std::fs::create_dir_all(&d).unwrap();
    let path = d.join("cfg.json");
    std::fs::write(&path, "{\"schema_version\": 1}").unwrap();
    let out = bin().arg("tails").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn kind_mismatch_is_a_config_error() {
    let d = tmp_dir("mismatch");
    std::fs::create_dir_all(&d).unwrap();
    let cfg = serde_json::json!({
        "schema_version": 1,
        "kind": "tails",
        "n": 64,
        "samples": 2000,
        "levels_right": [1.0, 1.3],
        "levels_left": [1.2, 1.5],
        "ensemble": {"beta": 2, "entry_dist": "gaussian"},
        "seed": 7,
        "out_dir": d.join("out"),
    });
    let path = d.join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out = bin().arg("simulate").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn unsupported_format_is_a_config_error() {
    let out = bin().arg("oracle-check").arg("--format").arg("parquet").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_runs_and_writes_manifest() {
    let d = tmp_dir("sim");
    let cfg = serde_json::json!({
        "schema_version": 1,
        "kind": "trajectories",
        "n_start": 6,
        "n_end": 20,
        "trajectories": 2,
        "ensemble": {"beta": 1, "entry_dist": "rademacher"},
        "seed": 9,
        "out_dir": "placeholder",
    });
    std::fs::create_dir_all(&d).unwrap();
    let path = d.join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out_dir = d.join("out");
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .arg("--workers")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("summary.csv").exists());
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn oracle_check_default_battery_passes() {
    let d = tmp_dir("oracle_default");
    let out = bin().arg("oracle-check").arg("--out").arg(&d).arg("--seed").arg("3").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("violations = 0"), "stdout: {stdout}");
    let _ = std::fs::remove_dir_all(&d);
}
