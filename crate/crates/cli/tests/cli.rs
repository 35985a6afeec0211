use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use srlw_cli::{run, CliError, Experiment, ExperimentConfig};

fn srlwctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srlwctl")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn report_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_string).collect()
}

#[test]
fn gap_report_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"gap-report","c":3,"N":50,"T":7}"#);
    let report = report_of(&srlwctl(&["gap-report", "--config", &cfg]));
    let delta = report["metrics"]["delta_combined"].as_f64().unwrap();
    assert!((delta - 1.0004).abs() < 1e-4, "{delta}");
    assert_eq!(report["config"]["parameters"]["N"], 50);
    assert!(report["wall_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bounded_spectrum_first_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"bounded-spectrum","M":8}"#);
    let report = report_of(&srlwctl(&["bounded-spectrum", "--config", &cfg]));
    let lambda = report["metrics"]["lambda_1"].as_f64().unwrap();
    assert!((lambda - 0.952890514).abs() < 1e-9, "{lambda}");
}

#[test]
fn unknown_experiment_exits_with_config_code() {
    let out = srlwctl(&["warp-drive"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "ConfigError");
}

#[test]
fn bad_parameters_exit_with_config_code() {
    for args in [
        &["gap-report", "--param", "N=-1"][..],
        &["gap-report", "--param", "speed=3"],
        &["approx-control", "--param", "basis=chebyshev"],
        &["gap-report", "--param", "c"],
    ] {
        let out = srlwctl(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_and_mismatched_configs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{not json");
    assert_eq!(srlwctl(&["gap-report", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"experiment":"simulate"}"#);
    assert_eq!(srlwctl(&["gap-report", "--config", &cfg]).status.code(), Some(2));
    let missing = dir.path().join("absent.json").display().to_string();
    assert_eq!(srlwctl(&["gap-report", "--config", &missing]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_code_three() {
    let out = srlwctl(&[
        "nonlinear-control",
        "--param",
        "data_norm=1",
        "--param",
        "max_iter=3",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "NonConvergence");
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"gap-report","c":3,"N":50,"T":7}"#);
    let report = report_of(&srlwctl(&["gap-report", "--config", &cfg, "--param", "N=10", "--param", "T=9"]));
    assert_eq!(report["config"]["parameters"]["N"], 10);
    assert_eq!(report["metrics"]["family_size"], 41);
}

#[test]
fn probe_cost_curve_has_one_row_per_constraint_count() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("probe");
    let out_str = out_dir.display().to_string();
    let report = report_of(&srlwctl(&["spectral-probe", "--out", &out_str, "--param", "M=6"]));
    let rows = csv_rows(&out_dir.join("cost_curve.csv"));
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("{},", i + 1)), "{row}");
    }
    let artifacts: Vec<&str> = report["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(artifacts.iter().any(|a| a.ends_with("cost_curve.csv")));
    let saved: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved["metrics"], report["metrics"]);
}

#[test]
fn trajectory_csv_has_one_row_per_time_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_str = dir.path().display().to_string();
    let report = report_of(&srlwctl(&["simulate", "--out", &out_str, "--param", "steps=20", "--param", "N=4"]));
    assert_eq!(report["metrics"]["time_points"], 21);
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 21);
    // time plus four real columns for each of the 9 modes
    assert!(rows.iter().all(|r| r.split(',').count() == 1 + 4 * 9));
}

#[test]
fn every_experiment_runs_with_defaults() {
    for experiment in Experiment::ALL {
        let report = run(&ExperimentConfig::new(experiment)).unwrap_or_else(|e| panic!("{experiment}: {e}"));
        assert!(!report.metrics.is_empty(), "{experiment}");
        assert!(!report.plot_data.is_empty(), "{experiment}");
    }
}

#[test]
fn repeated_runs_give_identical_metrics() {
    let mut cfg = ExperimentConfig::new(Experiment::MovingControl);
    cfg.apply_override("N=6").unwrap();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.metrics_json(), b.metrics_json());
    assert_eq!(a.plot_data, b.plot_data);
}

#[test]
fn library_errors_map_to_exit_codes() {
    let cfg = ExperimentConfig::from_json(r#"{"experiment":"spectral-probe","M":2,"target_mode":3}"#, None).unwrap();
    let err = run(&cfg).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn approx_control_sweep_is_monotone() {
    let mut cfg = ExperimentConfig::new(Experiment::ApproxControl);
    cfg.apply_override("precision_bits=512").unwrap();
    let report = run(&cfg).unwrap();
    assert_eq!(report.metrics["sweep_monotone"], Value::Bool(true));
    let residual = report.metrics["residual"].as_f64().unwrap();
    assert!(residual < 1e-3, "{residual}");
}
