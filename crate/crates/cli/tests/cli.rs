use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_nonlocal-sharp");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("NONLOCAL_SHARP_JOBS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, cases: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, format!(r#"{{"cases": [{cases}], "formats": ["csv"]}}"#)).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"s": 0.2, "gamma": 1.0, "p": 0.5, "n": 64}"#;

#[test]
fn predict_reports_regimes() {
    let out = run(&["predict", "--s", "0.2", "--gamma", "1", "--p", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["mu"], 0.8);
    assert_eq!(v["regime"], "scaling-dominated");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys[..4], ["mu", "sigma", "regime", "log_exponent"]);

    let v = stdout_json(&run(&["predict", "--s", "0.25", "--gamma", "1", "--p", "0.5"]));
    assert_eq!(v["regime"], "critical");
    assert_eq!(v["log_exponent"], 2.0);
}

#[test]
fn mu_pred_matches_the_library_bit_for_bit() {
    let (s, g, p) = (0.13, 0.71, 0.37);
    let v = stdout_json(&run(&["predict", "--s", "0.13", "--gamma", "0.71", "--p", "0.37"]));
    let lib = nonlocal_sharp_core::predict_mu(s, g, p).unwrap();
    assert_eq!(v["mu"].as_f64().unwrap().to_bits(), lib.mu.to_bits());
}

#[test]
fn invalid_arguments_exit_2() {
    assert_eq!(code(&run(&["predict", "--s", "1.2", "--gamma", "1", "--p", "0.5"])), 2);
    assert_eq!(code(&run(&["predict", "--s", "0.2", "--gamma", "1"])), 2);
    assert_eq!(code(&run(&["bq", "--s", "0.2", "--gamma", "1", "--q", "2"])), 2);
    assert_eq!(code(&run(&["solve", "--s", "0.2", "--gamma", "1", "--p", "0.5"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["solve", "--s", "0.2", "--gamma", "1", "--p", "1", "--out", out])), 2);
    assert_eq!(code(&run(&["solve", "--s", "0.6", "--gamma", "1", "--p", "0.5", "--out", out])), 2);
    assert_eq!(code(&run(&["study", "/nonexistent/config.json"])), 2);
}

#[test]
fn bq_regimes() {
    let v = stdout_json(&run(&["bq", "--s", "0.2", "--gamma", "1", "--q", "1"]));
    assert_eq!(v["regime"], "power");
    assert!((v["exponent"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    let v = stdout_json(&run(&["bq", "--s", "0.2", "--gamma", "1", "--q", "0.5"]));
    assert_eq!(v["regime"], "linear");
    let v = stdout_json(&run(&["bq", "--s", "0.5", "--gamma", "1", "--q", "0.5"]));
    assert_eq!(v["q_high"], Value::Null);
}

#[test]
fn solve_smoke_writes_solution_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = out.to_str().unwrap();
    let res = run(&["solve", "--s", "0.2", "--gamma", "1", "--p", "0.5", "--n", "64", "--out", o]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,delta,u"));
    assert_eq!(lines.count(), 64);
    assert!(!csv.contains('\r'));
    let fit: Value = serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["status"], "ok");
    for key in ["mu_pred", "mu_hat", "r2", "regime", "ghp_ratio", "iterations", "residual", "wall_ms"] {
        assert!(fit.get(key).is_some(), "{key}");
    }
}

#[test]
fn convergence_failure_exits_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let res = run(&["solve", "--s", "0.2", "--gamma", "1", "--p", "0.5", "--n", "64", "--max-iter", "1", "--out", o]);
    assert_eq!(code(&res), 3);
    let fit: Value = serde_json::from_slice(&std::fs::read(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["status"], "failed");
    assert_eq!(fit["stage"], "solve");
    assert_eq!(fit["iterations"], 1);
    assert!(!dir.path().join("solution.csv").exists());
}

#[test]
fn empty_case_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    assert_eq!(code(&run(&["study", &cfg])), 2);
}

#[test]
fn one_bad_case_stops_the_study_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{SMALL}, {{"s": 0.2, "gamma": 1.5, "p": 0.5, "n": 64}}"#));
    let out = dir.path().join("out");
    let res = run(&["study", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    assert!(!out.exists());
}

#[test]
fn duplicate_cases_give_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}, {SMALL}"));
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["study", &cfg, "--out", out.to_str().unwrap()])), 0);
    let csv = std::fs::read_to_string(out.join("study.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    // identical apart from the index column
    assert_eq!(rows[0].split_once(',').unwrap().1, rows[1].split_once(',').unwrap().1);
}

#[test]
fn study_output_is_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cases = format!(
        r#"{SMALL}, {{"s": 0.25, "gamma": 1.0, "p": 0.5, "n": 96}}, {{"s": 0.3, "gamma": 0.3, "p": 0.5, "n": 80}}"#
    );
    let cfg = write_config(dir.path(), &cases);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["study", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"])), 0);
    let res = Command::new(BIN)
        .args(["study", &cfg, "--out", b.to_str().unwrap(), "--jobs", "1"])
        .env("NONLOCAL_SHARP_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&res), 0);
    let ca = std::fs::read(a.join("study.csv")).unwrap();
    assert_eq!(ca, std::fs::read(b.join("study.csv")).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("index,status,s,gamma,p,backend,n,grading,mu_pred,mu_hat,"));
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[2], "2.0000000000000001e-1");
}

#[test]
fn bad_jobs_environment_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for v in ["0", "many"] {
        let res = Command::new(BIN)
            .args(["study", &cfg, "--out", dir.path().join("o").to_str().unwrap()])
            .env("NONLOCAL_SHARP_JOBS", v)
            .output()
            .unwrap();
        assert_eq!(code(&res), 2, "{v}");
    }
}

#[test]
fn eigen_green_norm_and_kernel_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let res = run(&["eigen", "--backend", "spectral-mt", "--s", "0.3", "--n", "200", "--grading", "1", "--count", "3", "--out", o]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let b: Value = serde_json::from_slice(&std::fs::read(dir.path().join("boundary.json")).unwrap()).unwrap();
    assert_eq!(b["pairs"].as_array().unwrap().len(), 3);
    let header = std::fs::read_to_string(dir.path().join("eigenfunctions.csv")).unwrap();
    assert!(header.starts_with("x,delta,phi_1,phi_2,phi_3\n"));
    assert_eq!(code(&run(&["eigen", "--s", "0.3", "--n", "200", "--out", o])), 2);

    let res = run(&["green-norm", "--s", "0.2", "--gamma", "1", "--q", "1", "--n", "400", "--out", o]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let g: Value = serde_json::from_slice(&std::fs::read(dir.path().join("green_norm.json")).unwrap()).unwrap();
    assert_eq!(g["bq_regime"], "power");
    assert!(g["sup_integral"].as_f64().unwrap() <= g["integral_bound"].as_f64().unwrap());

    let v = stdout_json(&run(&["verify-kernel", "--s", "0.2", "--gamma", "1", "--samples", "500"]));
    assert_eq!(v["violations"], 0);
    assert_eq!(v["n_samples"], 500);
}
