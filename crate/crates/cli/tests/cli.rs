use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_extremal-sv"));
    c.env_remove("EXTREMAL_SV_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV report, header excluded.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

#[test]
fn tau_of_a_diagonal_matrix() {
    let o = run(&["tau", "--matrix", "[[2,0],[0,3]]", "--no-timestamp"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows, vec![vec!["3.0".to_string()]]);
}

#[test]
fn constructed_model_reproduces_its_profile() {
    let model = scratch("model.json");
    let o = run(&["construct", "--eta", "0.8,0.5", "--out", model.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let j: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(j["provenance"]["command"], "construct");
    assert!(j["result"]["coeffs"].is_array());

    let o = run(&["eta", "--model", model.to_str().unwrap(), "--lags", "1,2", "--no-timestamp"]);
    assert!(o.status.success());
    let etas: Vec<f64> = csv_rows(&stdout(&o)).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((etas[0] - 0.8).abs() < 1e-12 && (etas[1] - 0.5).abs() < 1e-12, "{etas:?}");
}

#[test]
fn eta_profile_of_a_lag_range() {
    let model = scratch("ar.json");
    std::fs::write(&model, r#"{"coeffs":[1,0.5,0.25,0.125],"eta":{"kind":"laplace"},"eps":{"kind":"standard_normal"}}"#)
        .unwrap();
    let o = run(&["eta", "--model", model.to_str().unwrap(), "--lags", "1..3", "--no-timestamp"]);
    let text = stdout(&o);
    assert!(text.starts_with("# extremal-sv "));
    assert!(text.contains("\nh,eta,kappa_sum,case\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    for (r, ah) in rows.iter().zip([0.5, 0.25, 0.125]) {
        let eta: f64 = r[1].parse().unwrap();
        assert!((eta - 1.0 / (2.0 - ah)).abs() < 1e-12);
        assert!(r[3].starts_with("two_factor"));
    }
}

#[test]
fn reruns_without_timestamp_are_identical() {
    let model = scratch("sim.json");
    std::fs::write(&model, r#"{"coeffs":[1,0.6],"eta":{"kind":"laplace"},"eps":{"kind":"student_t","nu":4}}"#).unwrap();
    let args = ["simulate", "--model", model.to_str().unwrap(), "--T", "500", "--R", "3", "--no-timestamp"];
    let a = run(&args);
    let b = bin().args(args).args(["--workers", "3"]).output().unwrap();
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(csv_rows(&stdout(&a)).len(), 1500);
    let c = bin().args(args).args(["--seed", "7"]).output().unwrap();
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulated_batch_feeds_the_estimators() {
    let model = scratch("est.json");
    let batch = scratch("batch.csv");
    std::fs::write(&model, r#"{"coeffs":[1,0.5],"eta":{"kind":"laplace"},"eps":{"kind":"standard_normal"}}"#).unwrap();
    let o = run(&["simulate", "--model", model.to_str().unwrap(), "--T", "20000", "--out", batch.to_str().unwrap()]);
    assert!(o.status.success());
    let o = run(&["estimate", "--batch", batch.to_str().unwrap(), "--h", "1", "--format", "json"]);
    assert!(o.status.success(), "{o:?}");
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = j["result"].as_array().unwrap();
    let hill = rows.iter().find(|r| r["estimator"] == "hill_eta").unwrap();
    let v = hill["value"].as_f64().unwrap();
    assert!((0.5..=1.0).contains(&v), "{v}");
}

#[test]
fn usage_errors_are_json_on_stderr() {
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    let j: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(j["error"], "usage");

    let o = run(&["construct", "--eta", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    let j: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert!(!j["message"].as_str().unwrap().is_empty());
    assert!(o.stdout.is_empty());
}

#[test]
fn thread_variable_is_validated() {
    let o = bin().env("EXTREMAL_SV_THREADS", "many").args(["tau", "--matrix", "[[1]]"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().env("EXTREMAL_SV_THREADS", "2").args(["tau", "--matrix", "[[1]]"]).output().unwrap();
    assert!(o.status.success());
}

#[test]
fn exact_checks_pass_from_the_command_line() {
    let o = run(&["verify", "--only", "1,2,3", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().filter(|l| l.contains("PASS")).count(), 3, "{err}");
    assert!(stdout(&o).contains("check,name,label,estimate,target,lower,upper,pass"));
}

#[test]
fn lp_from_rows() {
    let o = run(&["lp-solve", "--a", "0,1,0.5", "--b", "1,0.5,0", "--format", "json", "--no-timestamp"]);
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["result"]["objective"].as_f64().unwrap(), 1.5);
    assert!(j["provenance"].get("timestamp").is_none());
}
