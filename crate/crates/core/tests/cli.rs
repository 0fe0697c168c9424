//! End-to-end runs of the `rqf` binary.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rqf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqf")).args(args).env("RQF_THREADS", "1").output().unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, cfg.to_string()).unwrap();
    p
}

fn run(dir: &Path, experiment: &str, cfg: Value) -> PathBuf {
    let path = write_config(dir, &format!("{experiment}.json"), &cfg);
    let out = dir.join("out");
    let o = rqf(&[experiment, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{experiment}: {}", String::from_utf8_lossy(&o.stderr));
    let seed = cfg["seeds"]["master"].as_u64().unwrap_or(0);
    out.join(format!("{experiment}-{seed}"))
}

fn first_line(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap().lines().next().unwrap().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn small(extra: Value) -> Value {
    let mut cfg = json!({ "n": 3, "T": 1.0, "dt": 0.01 });
    cfg.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    cfg
}

type Case = (&'static str, Value, Vec<(&'static str, &'static str)>);

#[test]
fn every_experiment_writes_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cases: Vec<Case> = vec![
        ("simulate", small(json!({})), vec![("trajectory.csv", "t,member_id,x_0,x_1,x_2")]),
        (
            "coupled",
            small(json!({ "seeds": { "count": 4 } })),
            vec![
                ("trajectory.csv", "t,member_id,x_0,x_1,x_2"),
                ("pair.csv", "t,z,sync"),
                ("endpoints.csv", "replicate,z_T,sync_T"),
            ],
        ),
        (
            "pullback",
            small(json!({ "grid_points": 20 })),
            vec![
                ("clusters.csv", "replicate,k,mass_0,mass_1,diameter_0,diameter_1,pole_inner_product"),
                ("diameters.csv", "t,k,diameter_0,diameter_1,max_pole_distance"),
                ("final_states.csv", "member_id,x_0,x_1,x_2"),
            ],
        ),
        (
            "zprocess",
            small(json!({ "seeds": { "count": 50 } })),
            vec![("hitting.csv", "z0,p_closed_form,p_monte_carlo,stderr"), ("z_paths.csv", "t,replicate,z")],
        ),
        (
            "fokker-planck",
            small(json!({ "cells": 101, "dt": 1e-4 })),
            vec![("density.csv", "z_center,mass"), ("mass_history.csv", "t,total_mass,tail_mass")],
        ),
        (
            "lyapunov",
            small(json!({ "T": 5.0 })),
            vec![("lyapunov.csv", "replicate,lambda,stderr,t_total,renorm_interval")],
        ),
        (
            "dqf",
            small(json!({ "matrix": [[1.0, 0.5, 0.0], [0.5, -1.0, 0.0], [0.0, 0.0, 0.2]] })),
            vec![("dqf.csv", "t,heun_error,top_distance,x_0,x_1,x_2")],
        ),
        (
            "bias-scan",
            small(json!({ "grid_points": 10, "ratios": [0.0, 1.0] })),
            vec![("bias_scan.csv", "ratio,sigma_q,sigma_w,seeds,single,bipolar,unresolved")],
        ),
        (
            "uniformity",
            small(json!({ "seeds": { "count": 200 } })),
            vec![("samples.csv", "replicate,x_0,x_1,x_2")],
        ),
    ];
    for (experiment, cfg, files) in cases {
        let dir = run(d, experiment, cfg);
        for (file, head) in files {
            assert_eq!(first_line(&dir, file), head, "{experiment}/{file}");
        }
        let m = manifest(&dir);
        assert_eq!(m["experiment"], experiment);
        for f in m["files"].as_array().unwrap() {
            let bytes = std::fs::read(dir.join(f["name"].as_str().unwrap())).unwrap();
            assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        }
    }
}

#[test]
fn hitting_table_contains_closed_form_value() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run(tmp.path(), "zprocess", small(json!({ "seeds": { "count": 20 } })));
    let text = std::fs::read_to_string(dir.join("hitting.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("0.5,0.84375,")), "{text}");
}

#[test]
fn svg_output_can_be_disabled() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.json", &small(json!({})));
    let out = tmp.path().join("out");
    let o = rqf(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-svg"]);
    assert!(o.status.success());
    assert!(!out.join("simulate-0/trajectory.svg").exists());
    assert!(out.join("simulate-0/trajectory.csv").exists());
}

#[test]
fn repeated_runs_have_identical_hashes() {
    let hashes: Vec<Value> = (0..2)
        .map(|_| {
            let tmp = tempfile::tempdir().unwrap();
            let dir = run(tmp.path(), "coupled", small(json!({ "seeds": { "master": 5, "count": 3 } })));
            let m = manifest(&dir);
            json!([m["content_hash"], m["files"]])
        })
        .collect();
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.json", &small(json!({})));
    let out = tmp.path().join("out");
    let o = rqf(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success());
    assert_eq!(manifest(&out.join("simulate-9"))["seed"], 9);
}

#[test]
fn validate_reports_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), "good.json", &small(json!({})));
    let o = rqf(&["validate", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], true);

    let bad = write_config(tmp.path(), "bad.json", &json!({ "n": 1, "T": 1.0, "dt": -0.1 }));
    let o = rqf(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let violations: Vec<&str> = v["violations"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    assert!(violations.contains(&"n must be ≥ 2"), "{violations:?}");
    assert!(violations.contains(&"dt must be positive"), "{violations:?}");

    let unknown = write_config(tmp.path(), "unknown.json", &json!({ "n": 3, "T": 1.0, "dt": 0.1, "bogus": 1 }));
    let o = rqf(&["validate", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("bogus"));
}

#[test]
fn unknown_experiment_names_the_valid_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.json", &small(json!({})));
    let o = rqf(&["teleport", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["exit_code"], 2);
    let names: Vec<&str> = v["valid_experiments"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    for name in ["simulate", "pullback", "fokker-planck", "bias-scan"] {
        assert!(names.contains(&name));
    }
    assert!(v["message"].as_str().unwrap().contains("teleport"));
}

#[test]
fn memory_cap_is_enforced() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.json", &small(json!({ "memory_cap_bytes": 1000 })));
    let out = tmp.path().join("out");
    let o = rqf(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["exit_code"], 4);
}

#[test]
fn runaway_separation_is_a_numerical_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({ "n": 3, "T": 100.0, "dt": 0.01, "renorm_interval": 50.0 });
    let path = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("out");
    let o = rqf(&["lyapunov", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("renorm"));
}

#[test]
fn invalid_run_config_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.json", &json!({ "n": 3, "T": 1.0, "dt": 0.0 }));
    let o = rqf(&["simulate", "--config", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
