use std::path::Path;
use std::process::{Command, Output};

fn mmkey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmkey")).args(args).output().unwrap()
}

fn error_category(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap_or_else(|_| panic!("stderr: {line}"));
    v["error"].as_str().unwrap().to_owned()
}

#[test]
fn rate_calc_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = mmkey(&["rate-calc", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    for f in ["report.json", "ensb_map.csv", "region_cells.csv", "timing.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let r = report["rates"]["r_max_bps"].as_f64().unwrap();
    assert!((r - 25e6).abs() < 1.0);
}

#[test]
fn platoon_with_json_config_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mmkey::ScenarioConfig::default_for("platoon").unwrap();
    if let mmkey::Scenario::Platoon(p) = &mut cfg.scenario {
        p.volume.resolution_m = 0.5;
    }
    let path = dir.path().join("platoon.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let out = mmkey(&[
        "platoon",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "77",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 77);
    assert_eq!(report["platoon"]["intersection_volume_m3"], 0.0);
}

#[test]
fn trials_override_reaches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = include_str!("../configs/exp2.toml")
        .replace("[2, 3, 4, 5]", "[2]")
        .replace("cells = 50", "cells = 6");
    let path = dir.path().join("e.toml");
    std::fs::write(&path, text).unwrap();
    let out = mmkey(&["exp2", "--config", path.to_str().unwrap(), "--trials", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["scenario"]["trials"], 3);
    let csv = std::fs::read_to_string(dir.path().join("ensb_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 36);
}

#[test]
fn validation_failures_exit_with_a_category() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, include_str!("../configs/exp1.toml").replace("[90.0]", "[0.0]")).unwrap();
    let out = mmkey(&["exp1", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_category(&out), "config");
    assert!(!dir.path().join("report.json").exists());

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "schema_version = 1\nseed = 0\nsurprise = 1\n").unwrap();
    let out = mmkey(&["rate-calc", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_category(&out), "parse");

    let out = mmkey(&["exp1", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_category(&out), "io");
}

#[test]
fn kind_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rc.toml");
    std::fs::write(&p, include_str!("../configs/rate-calc.toml")).unwrap();
    let out = mmkey(&["platoon", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_category(&out), "config");
}

#[test]
fn sweep_demo_writes_transcript_and_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let out = mmkey(&["sweep-demo", "--mobile", "0,50", "--eve", "-30,-40", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let t: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(t["beacons"].as_array().unwrap().len(), 36);
    assert_eq!(t["eve"][0], -30.0);
    let pattern = std::fs::read_to_string(dir.path().join("pattern.csv")).unwrap();
    assert_eq!(pattern.lines().count(), 1 + 360 * 36);
    assert!(Path::new(&dir.path().join("sweep.json")).exists());
}
