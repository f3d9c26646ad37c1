use std::process::{Command, Output};

use serde_json::Value;

fn expdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expdet"))
        .args(args)
        .env_remove("EXPDET_PREC")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn json_stderr(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key}"))
}

#[test]
fn bounds_two_by_two() {
    let out = expdet(&["bounds", "--x", "0,1", "--y", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_stdout(&out);
    assert_eq!(r["n"], 2);
    assert!((num(&r, "log_lower") - 0.5).abs() < 1e-15);
    assert!((num(&r, "log_det") - 0.541_325).abs() < 1e-6);
    assert!((num(&r, "log_upper") - 1.0).abs() < 1e-15);
    assert!(num(&r, "lower_gap") >= 0.0 && num(&r, "upper_gap") >= 0.0);
    assert!((num(&r, "det_if_representable") - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    assert_eq!(r["x"], serde_json::json!([0.0, 1.0]));
    assert_eq!(r["precision"], 256);
}

#[test]
fn bounds_single_node_is_exact() {
    let r = json_stdout(&expdet(&["bounds", "--x", "0", "--y", "0"]));
    for key in ["log_lower", "log_det", "log_upper"] {
        assert_eq!(num(&r, key), 0.0);
    }
}

#[test]
fn bounds_negative_nodes_and_files() {
    let path = std::env::temp_dir().join(format!("expdet-cli-{}.txt", std::process::id()));
    std::fs::write(&path, "# x nodes\n-1\n0.5\n2\n").unwrap();
    let arg = format!("@{}", path.display());
    let out = expdet(&["bounds", "--x", &arg, "--y", "-2,-1,0"]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_stdout(&out)["x"], serde_json::json!([-1.0, 0.5, 2.0]));
}

#[test]
fn invalid_nodes_exit_two() {
    let out = expdet(&["bounds", "--x", "0,1", "--y", "1,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let e = json_stderr(&out);
    assert_eq!(e["error"]["kind"], "NotStrictlyIncreasing");
    assert_eq!(e["error"]["index"], 1);

    let out = expdet(&["bounds", "--x", "0,1", "--y", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_stderr(&out)["error"]["kind"], "LengthMismatch");
}

#[test]
fn usage_errors_are_json() {
    let out = expdet(&["bounds", "--x", "0,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_stderr(&out)["error"]["kind"], "Usage");

    let out = expdet(&["--precision", "32", "bounds", "--x", "0", "--y", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_stderr(&out)["error"]["kind"], "InvalidPrecision");
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_expdet"))
        .args(["bounds", "--x", "0,1", "--y", "0,1"])
        .env("EXPDET_PREC", "128")
        .output()
        .unwrap();
    assert_eq!(json_stdout(&out)["precision"], 128);
}

#[test]
fn identity_examples() {
    let r = json_stdout(&expdet(&["identity", "--x", "0,1,2"]));
    assert!(num(&r["checks"]["corollary"], "residual") <= 1e-10);

    let out = expdet(&["identity", "--x", "0,1,2", "--u-sum", "2", "--y", "0,0.5,2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_stdout(&out);
    assert!(num(&r["checks"]["theorem"], "residual") <= 1e-8);
    assert!(num(&r["checks"]["lemma1_reduction"], "residual") <= 1e-8);
    assert_eq!(r["passed"], true);

    let out = expdet(&["identity", "--x", "0,1,2,3,4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_stderr(&out)["error"]["kind"], "TooManyDims");
}

#[test]
fn gauss_select_and_bounds() {
    let r = json_stdout(&expdet(&["gauss", "select", "--t", "0,1,2"]));
    assert_eq!(num(&r, "lambda_star"), 1.5);
    assert_eq!(r["N"], 3);
    assert_eq!(num(&r, "S"), 2.0);

    let r = json_stdout(&expdet(&["gauss", "bounds", "--t", "0,1", "--lambda", "1"]));
    assert!((num(&r, "log_lower") + 0.5).abs() < 1e-15);
    assert!((num(&r, "log_det") + 0.4587).abs() < 1e-4);
    assert_eq!(num(&r, "log_upper"), 0.0);

    let r = json_stdout(&expdet(&["gauss", "bounds", "--t", "0,1,2"]));
    assert_eq!(num(&r, "lambda"), 1.5);

    let out = expdet(&["gauss", "select", "--t", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_stderr(&out)["error"]["kind"], "DegenerateNodes");
}

#[test]
fn gauss_sweep_csv() {
    let out = expdet(&["gauss", "sweep", "--t", "0,1,2", "--lambda", "0.1:10:50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,log_f,log_lower,log_det,log_upper"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    let best = rows
        .iter()
        .max_by(|a, b| a[1].partial_cmp(&b[1]).unwrap())
        .unwrap();
    let nearest = rows
        .iter()
        .min_by(|a, b| (a[0].ln() - 1.5f64.ln()).abs().partial_cmp(&(b[0].ln() - 1.5f64.ln()).abs()).unwrap())
        .unwrap();
    assert_eq!(best[0], nearest[0]);
}

#[test]
fn gauss_sweep_loocv_needs_values() {
    let out = expdet(&["gauss", "sweep", "--t", "0,1,2", "--lambda", "0.5:2:3", "--loocv"]);
    assert_eq!(out.status.code(), Some(2));

    let out = expdet(&[
        "gauss", "sweep", "--t", "0,1,2", "--lambda", "0.5:2:3", "--loocv", "--values", "1,0,1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("lambda,log_f,log_lower,log_det,log_upper,loocv\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn gauss_interp_reproduces_values() {
    let out = expdet(&["gauss", "interp", "--t", "0,1,2", "--values", "1,-1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_stdout(&out);
    assert_eq!(r["coefficients"].as_array().unwrap().len(), 3);
    assert!(num(&r, "node_residual_inf") <= 1e-8);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let args = ["verify", "--n", "2..5", "--trials", "100", "--seed", "42"];
    let first = expdet(&args);
    assert_eq!(first.status.code(), Some(0));
    let r = json_stdout(&first);
    assert_eq!(r["total_failures"], 0);
    let second = expdet(&args);
    assert_eq!(first.stdout, second.stdout);

    let a = expdet(&["verify", "--trials", "1", "--seed", "9"]);
    let b = expdet(&["verify", "--trials", "1", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json_stdout(&a)["config"]["seed"], 9);
}

#[test]
fn verify_rejects_bad_ranges() {
    let out = expdet(&["verify", "--range", "3:-3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = expdet(&["verify", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_format_for_reports() {
    let out = expdet(&["--format", "csv", "gauss", "select", "--t", "0,1,2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "N,S,lambda_star,t\n3,2.0,1.5,0.0;1.0;2.0\n");
}
