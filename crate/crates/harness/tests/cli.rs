use std::fs;
use std::process::Command;

use implicit_td_harness::output::{read_agg_csv, read_meta, read_raw_csv};

fn itd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_itd"))
}

const WALK_CONFIG: &str = r#"{
  "env": {"kind": "random_walk"},
  "algorithm": {"family": "td", "mode": "implicit"},
  "lambda": 0.5,
  "schedule_alpha": {"kind": "constant", "c": 0.1},
  "n_steps": 200,
  "n_replications": 3,
  "master_seed": 7,
  "metrics": ["rmsve", "rmstde"],
  "snapshot_every": 50
}"#;

#[test]
fn run_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("walk.json");
    fs::write(&config, WALK_CONFIG).unwrap();
    let out = dir.path().join("out");
    let status = itd().arg("run").arg(&config).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());

    let raw = read_raw_csv(&out.join("raw.csv")).unwrap();
    // snapshots at 0, 50, 100, 150, 200 for two metrics and three replications
    assert_eq!(raw.len(), 5 * 2 * 3);
    let agg = read_agg_csv(&out.join("agg.csv")).unwrap();
    assert_eq!(agg.len(), 5 * 2);
    let meta = read_meta(&out.join("meta.json")).unwrap();
    assert_eq!(meta.master_seed, 7);
    assert_eq!(meta.diverged.count, 0);

    let first = fs::read(out.join("raw.csv")).unwrap();
    let again = dir.path().join("again");
    let status = itd().args(["--threads", "1", "run"]).arg(&config).arg("--out").arg(&again).status().unwrap();
    assert!(status.success());
    assert_eq!(first, fs::read(again.join("raw.csv")).unwrap());
}

#[test]
fn invalid_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, WALK_CONFIG.replace("\"lambda\": 0.5", "\"lambda\": 1.5")).unwrap();
    let out = itd().arg("run").arg(&config).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    fs::write(&config, "{ not json").unwrap();
    assert_eq!(itd().arg("run").arg(&config).status().unwrap().code(), Some(1));
}

#[test]
fn missing_config_exits_with_three() {
    let status = itd().args(["run", "/nonexistent/config.json"]).status().unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn verify_passes_and_detects_an_injected_fault() {
    let ok = itd().arg("verify").output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.lines().filter(|l| l.contains("PASS")).count() >= 19);

    let bad = itd().args(["verify", "--json", "--inject-fault", "flip-effective-step"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert!(report.to_string().contains("implicit_td0_equals_fixed_point"));
}

#[test]
fn oracle_prints_bundle_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("walk.json");
    fs::write(&config, WALK_CONFIG).unwrap();
    let out = itd().arg("oracle").arg(&config).output().unwrap();
    assert!(out.status.success());
    let bundle: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(bundle["fixed_point_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(bundle["w_star"].as_array().unwrap().len(), 5);
}

#[test]
fn unknown_preset_and_bad_arguments_fail() {
    assert_eq!(itd().args(["repro", "no-such-preset"]).status().unwrap().code(), Some(1));
    assert_eq!(itd().arg("frobnicate").status().unwrap().code(), Some(1));
    assert_eq!(itd().arg("--help").status().unwrap().code(), Some(0));
}
