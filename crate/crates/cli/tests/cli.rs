use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn modinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modinv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn identity_superop(n: usize) -> Value {
    let d = n * n;
    let rows: Vec<Value> = (0..d)
        .map(|i| Value::Array((0..d).map(|j| json!([if i == j { 1.0 } else { 0.0 }, 0.0])).collect()))
        .collect();
    json!({ "n": n, "smat": rows })
}

fn diag_vector(entries: &[f64]) -> Value {
    let n = entries.len();
    let rows: Vec<Value> = (0..n)
        .map(|i| Value::Array((0..n).map(|j| json!([if i == j { entries[i] } else { 0.0 }, 0.0])).collect()))
        .collect();
    json!({ "n": n, "mat": rows })
}

fn two_class_target() -> Value {
    json!({ "pairs": [
        { "lambda": 1.0, "n": "5/9" },
        { "lambda": 2.0, "n": "2/9" },
        { "lambda": 0.5, "n": "2/9" },
    ]})
}

#[test]
fn enumerate_two_class_target() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "target.json", &two_class_target());
    let out = modinv(&["classes", "enumerate", "--target", s(&t), "--ftype", "I_3"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["incomplete"], json!(false));
    let classes = v["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 2);
    // canonical order: the class with the larger top eigenvalue first
    assert!(classes[0]["pairs"][0]["mu"].as_f64().unwrap() > classes[1]["pairs"][0]["mu"].as_f64().unwrap());
    assert_eq!(classes[0]["pairs"][0]["m"], json!("1/3"));
    assert_eq!(classes[1]["pairs"][0]["m"], json!("2/3"));

    let same = modinv(&["classes", "enumerate", "--target", s(&t), "--ftype", "I_N", "--n", "3"]);
    assert_eq!(same.stdout, out.stdout);
}

#[test]
fn grid_classes_three_and_four_differ() {
    let dir = TempDir::new().unwrap();
    let third = 1.0 / 3.0;
    let a = write(&dir, "c3.json", &json!({ "ftype": "II_1", "pairs": [
        { "mu": 1.0, "m": third }, { "mu": 0.1, "m": third }, { "mu": 0.001, "m": third }
    ]}));
    let b = write(&dir, "c4.json", &json!({ "ftype": "II_1", "pairs": [
        { "mu": 1000.0, "m": third }, { "mu": 10.0, "m": third }, { "mu": 1.0, "m": third }
    ]}));
    let out = modinv(&["classes", "equivalent", "--a", s(&a), "--b", s(&b)]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["equivalent"], json!(false));
}

#[test]
fn verify_identity_passes() {
    let dir = TempDir::new().unwrap();
    let u0 = write(&dir, "u0.json", &diag_vector(&[1.5f64.sqrt(), 0.5f64.sqrt()]));
    let id = write(&dir, "id.json", &identity_superop(2));
    let out = modinv(&["solve", "verify", "--u0", s(&u0), "--unitary", s(&id)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], json!("PASS"));
    assert_eq!(v["tol"]["eq_tol"], json!(1e-9));
}

#[test]
fn verify_reports_failure_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let u0 = write(&dir, "u0.json", &diag_vector(&[1.5f64.sqrt(), 0.5f64.sqrt()]));
    // multiplication by i does not commute with an antilinear J₀
    let mut u = identity_superop(2);
    for i in 0..4 {
        u["smat"][i][i] = json!([0.0, 1.0]);
    }
    let u = write(&dir, "u.json", &u);
    let out = modinv(&["solve", "verify", "--u0", s(&u0), "--unitary", s(&u)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["verdict"], json!("FAIL"));
    let diag: Value = serde_json::from_slice(out.stderr.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(diag["level"], json!("fail"));
}

#[test]
fn invalid_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", &json!({ "n": 2, "mat": [[[1.0, 0.0]]] }));
    let out = modinv(&["vector", "classify", "--in", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(out.stderr.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(diag["level"], json!("error"));

    let missing = modinv(&["vector", "classify", "--in", "/nonexistent/u.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let singular = write(&dir, "sing.json", &diag_vector(&[1.0, 0.0]));
    let out = modinv(&["modular", "compute", "--in", s(&singular)]);
    assert_eq!(out.status.code(), Some(2));

    let out = modinv(&["--tol", "2", "model", "info", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn built_solution_round_trips_through_verify() {
    let dir = TempDir::new().unwrap();
    let u0 = write(&dir, "u0.json", &diag_vector(&[0.75f64.sqrt(), 0.75f64.sqrt(), 1.5f64.sqrt()]));
    let data = write(&dir, "d.json", &json!({ "ftype": "I_N", "n": 3, "pairs": [
        { "mu": 1.2, "m": "2/3" }, { "mu": 0.6, "m": "1/3" }
    ]}));
    let args = ["solve", "build", "--u0", s(&u0), "--data", s(&data), "--seed", "7"];
    let first = modinv(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = modinv(&args);
    assert_eq!(first.stdout, second.stdout, "identical seeds give identical bytes");

    let cert = stdout_json(&first);
    assert_eq!(cert["verdict"], json!("PASS"));
    let unitary = write(&dir, "U.json", &cert["unitary"]);
    let out = modinv(&["solve", "verify", "--u0", s(&u0), "--unitary", s(&unitary)]);
    assert!(out.status.success());

    let out = modinv(&["solve", "nf1", "--u0", s(&u0), "--unitary", s(&unitary)]);
    assert_eq!(stdout_json(&out)["member"], json!(false));

    let id = write(&dir, "id.json", &identity_superop(3));
    let out = modinv(&["solve", "equivalent", "--u0", s(&u0), "--ua", s(&id), "--ub", s(&unitary)]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["equivalent"], json!(false));

    // whole certificates are accepted where a unitary is expected
    let whole = dir.path().join("cert.json");
    std::fs::write(&whole, &first.stdout).unwrap();
    let out = modinv(&["solve", "verify", "--u0", s(&u0), "--unitary", s(&whole)]);
    assert_eq!(stdout_json(&out)["verdict"], json!("PASS"));
    let sc = dir.path().join("sc.json");
    std::fs::write(&sc, modinv(&["solve", "second-class", "--u0", s(&u0)]).stdout).unwrap();
    let out = modinv(&["solve", "equivalent", "--u0", s(&u0), "--ua", s(&sc), "--ub", s(&whole)]);
    assert_eq!(stdout_json(&out)["equivalent"], json!(true));
}

#[test]
fn incompatible_data_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let u0 = write(&dir, "u0.json", &diag_vector(&[1.5f64.sqrt(), 0.5f64.sqrt()]));
    let data = write(&dir, "d.json", &json!({ "ftype": "I_N", "n": 2, "pairs": [
        { "mu": 1.6, "m": "1/2" }, { "mu": 0.4, "m": "1/2" }
    ]}));
    let out = modinv(&["solve", "build", "--u0", s(&u0), "--data", s(&data)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn second_class_and_oracle() {
    let dir = TempDir::new().unwrap();
    let u0 = write(&dir, "u0.json", &diag_vector(&[1.5f64.sqrt(), 0.5f64.sqrt()]));
    let out = modinv(&["solve", "second-class", "--u0", s(&u0)]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], json!("PASS"));
    assert_eq!(v["solution"]["verdict"], json!("PASS"));

    let out = modinv(&["modular", "compute", "--in", s(&u0), "--oracle"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!(v["oracle"]["delta_deviation"].as_f64().unwrap() < 1e-9);
    assert!(v["identities"]["inversion"].as_f64().unwrap() < 1e-9);
}

#[test]
fn classes_commands() {
    let dir = TempDir::new().unwrap();
    let d = write(&dir, "d.json", &json!({ "ftype": "I_N", "n": 2, "pairs": [
        { "mu": 1.5, "m": "1/2" }, { "mu": 0.5, "m": "1/2" }
    ]}));
    let v = stdout_json(&modinv(&["classes", "validate", "--in", s(&d)]));
    assert_eq!(v["valid"], json!(true));

    let v = stdout_json(&modinv(&["classes", "spectrum", "--in", s(&d)]));
    let pairs = v["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    assert_eq!(pairs[1], json!({ "lambda": 1.0, "n": "1/2" }));
    let spectrum = write(&dir, "s.json", &v);

    let v = stdout_json(&modinv(&["classes", "compatible", "--in", s(&d), "--target", s(&spectrum)]));
    assert_eq!(v["compatible"], json!(true));

    let v = stdout_json(&modinv(&["classes", "dual", "--in", s(&d)]));
    assert_eq!(v["self_dual"], json!(true));

    let scaled = write(&dir, "scaled.json", &json!({ "ftype": "I_N", "n": 2, "pairs": [
        { "mu": 3.0, "m": "1/2" }, { "mu": 1.0, "m": "1/2" }
    ]}));
    let v = stdout_json(&modinv(&["classes", "normalize", "--in", s(&scaled)]));
    assert_eq!(v["scale"], json!(0.5));

    let ii = write(&dir, "ii.json", &json!({ "ftype": "II_1", "pairs": [
        { "mu": 0.75, "m": 2.0 / 3.0 }, { "mu": 1.5, "m": 1.0 / 3.0 }
    ]}));
    let v = stdout_json(&modinv(&["classes", "variants", "--in", s(&ii), "--permutation", "1,0"]));
    assert_eq!(v["equivalent_to_original"], json!(false));
    assert_eq!(v["compatible_with_original_spectrum"], json!(true));
    let v = stdout_json(&modinv(&["classes", "variants", "--in", s(&ii), "--shift", "0,1,0"]));
    assert_eq!(v["equivalent_to_original"], json!(true));

    let bad = write(&dir, "bad.json", &json!({ "ftype": "I_N", "n": 2, "pairs": [
        { "mu": 1.5, "m": "1/3" }, { "mu": 0.5, "m": "1/2" }
    ]}));
    let out = modinv(&["classes", "validate", "--in", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_json(&out)["violations"].as_array().unwrap().len() >= 2);
}

#[test]
fn model_info_and_delta_factorize() {
    let v = stdout_json(&modinv(&["model", "info", "--n", "3"]));
    assert_eq!(v["hilbert_dim"], json!(9));
    assert_eq!(v["trace_vector"]["mat"][1][1], json!([1.0, 0.0]));

    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", &identity_superop(2));
    let v = stdout_json(&modinv(&["delta", "factorize", "--in", s(&id)]));
    let h00 = &v["h"]["mat"][0][0];
    assert!((h00[0].as_f64().unwrap() - 1.0).abs() < 1e-12 && h00[1].as_f64().unwrap().abs() < 1e-12);
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn standard_input_is_accepted() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_modinv"))
        .args(["vector", "classify", "--in", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let text = serde_json::to_string(&diag_vector(&[1.0, 1.0])).unwrap();
    child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["cyclic"], json!(true));
}
