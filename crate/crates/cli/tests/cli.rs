//! End-to-end checks of the `eigenacs` commands and their output files.

use std::path::Path;
use std::process::Command;

use eigenacs_cli::commands::SolveReport;
use eigenacs_cli::{compare, oracle, solve, RunConfig};
use serde_json::{json, Value};

fn config(value: Value, out: &Path) -> RunConfig {
    let mut value = value;
    value["output"]["dir"] = json!(out);
    RunConfig::from_json(&value.to_string()).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_wall_times(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| k != "wall_time_s");
            map.values_mut().for_each(strip_wall_times);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_wall_times),
        _ => {}
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eigenacs"))
}

#[test]
fn single_solve_writes_report_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(json!({"problem": "buckling_pin_pin", "basis": {"width": 200}, "single": {"mu0": 8.0}}), dir.path());
    let SolveReport::Single(report) = solve(&cfg).unwrap() else { panic!("single report expected") };
    assert!((report.estimate.mu - std::f64::consts::PI.powi(2)).abs() < 1e-3);
    assert_eq!(report.oracle.as_ref().unwrap().oracle_label, "k=1");

    let saved = read_json(&dir.path().join("report.json"));
    assert_eq!(saved["kind"], "single");
    assert_eq!(saved["provenance"]["acs"]["max_iters"], 2000);

    let history = std::fs::read_to_string(dir.path().join("loss_history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("iter,half_step,loss"));
    assert_eq!(lines.count(), report.estimate.loss_history.len());
}

#[test]
fn field_samples_stay_in_the_l_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "helmholtz_lshape", "basis": {"width": 80}, "collocation": {"n_interior": 200},
               "acs": {"max_iters": 5}, "output": {"emit_fields": true, "grid": 17}}),
        dir.path(),
    );
    solve(&cfg).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("mode_1.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["x", "y", "u"]);
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    // 17 x 17 grid minus the open removed quadrant (8 x 8 points)
    assert_eq!(rows.len(), 17 * 17 - 64);
    for r in &rows {
        assert!(r[0].abs() <= 1.0 && r[1].abs() <= 1.0);
        assert!(!(r[0] > 0.0 && r[1] < 0.0), "point ({}, {}) outside", r[0], r[1]);
        assert!(r[2].is_finite());
    }
}

#[test]
fn single_solve_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(json!({"problem": "buckling_fixed_free", "seed": 4, "basis": {"width": 100}}), dir.path());
        solve(&cfg).unwrap();
        let mut v = read_json(&dir.path().join("report.json"));
        strip_wall_times(&mut v);
        v["provenance"]["output"] = Value::Null;
        v
    };
    assert_eq!(run(), run());
}

#[test]
fn oracle_command_writes_values() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["oracle", "plate_ss", "--count", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let saved = read_json(&dir.path().join("oracle.json"));
    let values = saved["values"].as_array().unwrap();
    assert_eq!(values.len(), 3);
    let first = ((std::f64::consts::PI / 10.0).powi(2) + (std::f64::consts::PI / 5.0).powi(2)).powi(2);
    assert!((values[0]["mu"].as_f64().unwrap() - first).abs() < 1e-12);

    let fd = oracle("helmholtz_lshape", 2, Some(0.25), None).unwrap();
    assert_eq!(fd.values.len(), 2);
    assert!(fd.discretization.is_some());
}

#[test]
fn unknown_problem_is_rejected_with_the_valid_names() {
    let out = bin().args(["oracle", "membrane", "--count", "2"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("membrane") && err.contains("helmholtz_square"), "{err}");
}

#[test]
fn config_with_unknown_field_is_rejected() {
    let err = RunConfig::from_json(r#"{"problem": "plate_ss", "acs": {"max_iter": 3}}"#).unwrap_err();
    assert!(format!("{err:#}").contains("max_iter"));
}

#[test]
fn solve_binary_runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"problem": "buckling_fixed_free", "basis": {"width": 100}}"#).unwrap();
    let out = bin().arg("solve").arg(&path).arg("--out").arg(dir.path().join("out")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/report.json").exists());
}

#[test]
fn compare_with_a_frozen_baseline_never_reaches_the_acs_loss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "buckling_pin_pin", "basis": {"width": 100}, "single": {"mu0": 9.0},
               "gd": {"lr": 0.0, "steps": 10}}),
        dir.path(),
    );
    let report = compare(&cfg).unwrap();
    assert!(!report.gd_reached_acs_loss);
    assert_eq!(report.gd.mu, 9.0);
    assert!(report.acs.final_loss < report.gd.final_loss);
    assert!(dir.path().join("compare.json").exists());
}
