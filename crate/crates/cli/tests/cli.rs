use std::process::{Command, Output};

use serde_json::Value;
use tractorlab::report::is_anchor;

fn tractorlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tractorlab"))
        .args(args)
        .env_remove("TRACTORLAB_SEED")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn verify_round_sphere_passes() {
    let out = tractorlab(&["verify", "--model", "round_sphere", "--m", "1", "--signature", "2,0", "--points", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["wall_time"].is_null());
    assert!(r["checks"].as_array().unwrap().len() > 20);
    assert_eq!(r["models"][0]["name"], "round_sphere");
}

#[test]
fn stratify_flat_model_passes() {
    let out = tractorlab(&["stratify", "--model", "flat_projective", "--m", "1", "--signature", "1,1", "--points", "40"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["check_name"] == "stratify/root_tau"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["verify", "--model", "round_sphere", "--m", "5"],
        vec!["verify", "--model", "nonsense"],
        vec!["verify", "--suite", "nonsense", "--points", "4"],
        vec!["verify", "--signature", "2;0"],
        vec!["verify", "--signature", "1,0"],
        vec!["verify", "--frobnicate"],
    ] {
        let out = tractorlab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failing_tolerance_exits_1() {
    let out = tractorlab(&["verify", "--suite", "sasaki", "--points", "4", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report(&out)["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    for p in &paths {
        let out = tractorlab(&["verify", "--suite", "sasaki,cone", "--points", "8", "--seed", "3", "--report", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert!(!a.is_empty());
}

#[test]
fn config_file_and_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "suite = \"sasaki\"\npoints = 4\nseed = 11\n").unwrap();
    let out = tractorlab(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["models"][0]["seed"], 11);
    let out = Command::new(env!("CARGO_BIN_EXE_tractorlab"))
        .args(["verify", "--suite", "sasaki", "--points", "4"])
        .env("TRACTORLAB_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(report(&out)["models"][0]["seed"], 5);
}

#[test]
fn timing_fills_wall_time() {
    let out = tractorlab(&["verify", "--suite", "sasaki", "--points", "4", "--timing"]);
    assert!(report(&out)["wall_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn every_check_cites_a_known_anchor() {
    let out = tractorlab(&["verify", "--suite", "sasaki,tractor_hk,cone,adapted", "--points", "6"]);
    let r = report(&out);
    for c in r["checks"].as_array().unwrap() {
        let a = c["paper_anchor"].as_str().unwrap();
        assert!(is_anchor(a), "{} cites {a}", c["check_name"]);
    }
}

#[test]
fn list_models_names_every_model() {
    let out = tractorlab(&["list-models"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in tractorlab::models::MODEL_NAMES {
        assert!(text.contains(name));
    }
}
