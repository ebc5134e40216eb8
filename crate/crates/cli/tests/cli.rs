use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn ezv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ezv"))
        .args(args)
        .env_remove("EZV_PRECISION")
        .output()
        .expect("run ezv")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

fn value(v: &Value) -> (f64, f64) {
    (v["value"]["re"].as_f64().unwrap(), v["value"]["im"].as_f64().unwrap())
}

fn d2(q: f64) -> f64 {
    // (-2πi)^2 Σ σ_1(n) q^n
    let mut s = 0.0;
    for n in 1..200u64 {
        let sigma: u64 = (1..=n).filter(|d| n % d == 0).sum();
        s += sigma as f64 * q.powi(n as i32);
    }
    -4.0 * PI * PI * s
}

#[test]
fn eval_zk_matches_even_split() {
    let out = ezv(&["eval", "zk", "--k", "2", "--tau", "0,2", "--sigma", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let env = &lines(&out)[0];
    let (re, im) = value(env);
    let expected = d2((-2.0 * PI).exp()) - d2((-4.0 * PI).exp());
    assert!((re - expected).abs() < 1e-12 * expected.abs(), "{re} vs {expected}");
    assert!(im.abs() < 1e-14);
    assert!(env["err_bound"].as_f64().unwrap() < 1e-10);
}

#[test]
fn eval_theta0_at_zero() {
    let out = ezv(&["eval", "theta0", "--z", "0", "--tau", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let (re, im) = value(&lines(&out)[0]);
    assert_eq!((re, im), (0.0, 0.0));
}

#[test]
fn eval_zeta_two() {
    let out = ezv(&["eval", "zeta", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let (re, _) = value(&lines(&out)[0]);
    assert!((re - PI * PI / 6.0).abs() < 1e-12);
}

#[test]
fn envelope_key_order_and_precision_echo() {
    let out = ezv(&["eval", "zeta", "--k", "3", "--epsilon", "1e-10"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys = ["\"request\"", "\"value\"", "\"err_bound\"", "\"residual\"", "\"pass\"", "\"terms_used\"", "\"wall_time_ms\""];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    let v: Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["request"]["precision"]["epsilon"].as_f64(), Some(1e-10));
}

#[test]
fn precision_env_var() {
    let out = Command::new(env!("CARGO_BIN_EXE_ezv"))
        .args(["eval", "zeta", "--k", "4"])
        .env("EZV_PRECISION", "1e-6")
        .output()
        .unwrap();
    let v = &lines(&out)[0];
    assert_eq!(v["request"]["precision"]["epsilon"].as_f64(), Some(1e-6));
}

#[test]
fn output_is_deterministic() {
    let strip = |out: Output| {
        let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["wall_time_ms"] = Value::Null;
        v.to_string()
    };
    let args = ["eval", "zk", "--k", "5", "--tau", "0.1,1.2", "--sigma", "-0.3,0.9"];
    assert_eq!(strip(ezv(&args)), strip(ezv(&args)));
}

#[test]
fn verify_modular_k3() {
    let out = ezv(&["verify", "three-term-mod", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = &lines(&out)[0];
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v["residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn verify_modular_k3_without_anomaly_fails() {
    let out = ezv(&["verify", "three-term-mod", "--k", "3", "--no-anomaly"]);
    assert_eq!(out.status.code(), Some(1));
    let v = &lines(&out)[0];
    assert_eq!(v["pass"], Value::Bool(false));
    assert!(v["residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn verify_functional_equation() {
    let out = ezv(&["verify", "func-eq", "--z", "0.3,0.2", "--tau", "0.2,1.0", "--sigma", "0.1,0.8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(lines(&out)[0]["pass"], Value::Bool(true));
}

#[test]
fn verify_streams_one_line_per_k() {
    let out = ezv(&["verify", "three-term-add"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(lines(&out).len(), 8);
}

#[test]
fn limits_zeta_error_decreases() {
    let out = ezv(&["limits", "zeta-limit", "--k", "2", "--sigmas", "0.05,0.02,0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let errs: Vec<f64> = lines(&out).iter().map(|v| v["residual"].as_f64().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn limits_gamma_final_row() {
    let out = ezv(&["limits", "gamma-limit"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = lines(&out);
    let (re, _) = value(rows.last().unwrap());
    assert!((re - 0.577_215_664_901_532_9).abs() < 5e-2);
}

#[test]
fn limits_scl_approaches_one() {
    let out = ezv(&["limits", "scl-limit", "--z", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = lines(&out);
    let (re, im) = value(rows.last().unwrap());
    assert!((re - 1.0).abs() < 1e-2 && im.abs() < 1e-2);
}

#[test]
fn limits_csv_has_header() {
    let out = ezv(&["limits", "gamma-limit", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(&r.headers().unwrap()[9], "residual");
    assert_eq!(r.records().count(), 3);
}

#[test]
fn table_divisors() {
    let out = ezv(&["table", "divisors", "--kmax", "4", "--nmax", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let hit = r
        .records()
        .map(|rec| rec.unwrap())
        .find(|rec| &rec[0] == "6" && &rec[1] == "2")
        .unwrap();
    assert_eq!(&hit[2], "12");
}

#[test]
fn table_dk_leading_coefficient() {
    let out = ezv(&["table", "dk-coeffs", "--k", "2", "--nmax", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rec = r.records().next().unwrap().unwrap();
    let re: f64 = rec[1].parse().unwrap();
    assert!((re + 4.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn table_zk_grid_shape() {
    let out = ezv(&["table", "zk-grid", "--k", "5", "--grid", "3x3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert!(r.headers().unwrap().iter().any(|h| h == "err_bound"));
    assert_eq!(r.records().count(), 9);
}

#[test]
fn table_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("div.csv");
    let out = ezv(&["table", "divisors", "--nmax", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("n,k,"));
}

#[test]
fn unwritable_output_is_io_error() {
    let out = ezv(&["table", "divisors", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn usage_errors() {
    assert_eq!(ezv(&["eval", "bogus"]).status.code(), Some(64));
    assert_eq!(ezv(&["eval", "zk", "--k", "2", "--tau", "1,,2"]).status.code(), Some(64));
    assert_eq!(ezv(&["eval", "zk"]).status.code(), Some(64));
    assert_eq!(ezv(&["table", "zk-grid", "--k", "2", "--grid", "3y3"]).status.code(), Some(64));
}

#[test]
fn domain_error_exit_code() {
    let out = ezv(&["eval", "zk", "--k", "2", "--tau", "0,-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(lines(&out)[0]["error"]["kind"], "domain");
}

#[test]
fn pole_exit_code() {
    let out = ezv(&["eval", "ellgamma", "--z", "0,0"]);
    assert_eq!(out.status.code(), Some(3));
    let v = &lines(&out)[0];
    assert_eq!(v["error"]["kind"], "pole");
    assert_eq!(v["error"]["factor"], serde_json::json!([0, 0]));
}

#[test]
fn truncation_exit_code() {
    let out = ezv(&["eval", "zeta", "--k", "3", "--max-terms", "2", "--epsilon", "1e-300"]);
    assert_eq!(out.status.code(), Some(4));
    let v = &lines(&out)[0];
    assert_eq!(v["error"]["kind"], "truncation");
    assert!(v["error"]["partial"]["err_bound"].as_f64().unwrap() > 0.0);
}
