use std::process::{Command, Output};

use serde_json::Value;

fn renorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renorm")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = renorm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lattice_values() {
    let v = json(&["lattice", "--tau", "0.5", "0.8660254", "--m", "1", "--route", "eta"]);
    assert!((v["result"]["value"].as_f64().unwrap() + 0.2011).abs() < 1e-3);
    let v = json(&["lattice", "--tau", "0", "1", "--m", "1", "--route", "eta"]);
    assert!((v["result"]["value"].as_f64().unwrap() + 0.1958).abs() < 1e-3);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["command"]["subcommand"], "lattice");
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn lattice_routes_and_basis_input() {
    let f = json(&["lattice", "--tau", "0", "1", "--route", "fourier"]);
    assert!((f["result"]["value"].as_f64().unwrap() + 0.195797).abs() < 1e-4);
    let z = json(&["lattice", "--tau", "0", "1", "--route", "zetadiff-vs"]);
    assert!((z["result"]["value"].as_f64().unwrap() - 0.0053).abs() < 5e-4);
    // Z^2 has covolume 1, so density 2 pi
    let b = json(&["lattice", "--basis", "1", "0", "0", "1"]);
    let m = b["result"]["m"].as_f64().unwrap();
    assert!((m - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    let w1 = -0.195_797_196_353;
    assert!((b["result"]["value"].as_f64().unwrap() - m * (w1 - 0.25 * m.ln())).abs() < 1e-9);
}

#[test]
fn json_numbers_have_twelve_digits() {
    let out = renorm(&["lattice", "--tau", "0.1", "1.2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"value\"")).unwrap();
    let digits: String = line.split(':').nth(1).unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
    assert!(digits.trim_start_matches('0').len() <= 12, "{line}");
}

#[test]
fn usage_errors_exit_with_two() {
    let o = renorm(&["lattice", "--tau", "0", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NonPositiveImaginaryPart"));
    let o = renorm(&["moduli-scan", "--a-min", "-0.8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("InvalidGrid"));
    let o = renorm(&["moduli-scan", "--b-max", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(renorm(&["lattice"]).status.code(), Some(2));
    assert_eq!(renorm(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(renorm(&["obstacle", "--disk"]).status.code(), Some(2));
    assert_eq!(renorm(&["obstacle", "--disk", "--m", "1.5"]).status.code(), Some(2));
    assert_eq!(renorm(&["fekete", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let o = renorm(&["obstacle", "--disk", "--m", "0.9", "--h", "0.0625", "--tol", "1e-17"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NoConvergence"));
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_renorm"))
        .args(["lattice", "--tau", "0", "1"])
        .env("RENORM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("RENORM_THREADS"));
}

#[test]
fn moduli_scan_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let v = json(&["moduli-scan", "--resolution", "30", "--csv", path.to_str().unwrap()]);
    let arg = &v["result"]["refined"];
    assert!((arg["a"].as_f64().unwrap().abs() - 0.5).abs() < 1e-3);
    assert!((arg["b"].as_f64().unwrap() - 0.866025).abs() < 1e-3);
    assert!(v["result"].get("values").is_none());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("a,b,W\n"));
    assert_eq!(csv.lines().count(), 1 + 30 * 30);

    let single = json(&["moduli-scan", "--resolution", "1"]);
    let g = &single["result"]["grid_argmin"];
    assert_eq!(g["a"].as_f64(), Some(-0.5));
}

#[test]
fn fekete_runs() {
    let one = json(&["fekete", "--n", "1"]);
    assert_eq!(one["result"]["iterations"], 0);
    assert!((one["result"]["energy"].as_f64().unwrap() + 0.195797).abs() < 1e-5);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let two = json(&["fekete", "--n", "2", "--seed", "0", "--csv", path.to_str().unwrap()]);
    let oracle = 2.0 * (-0.195_797_196_353 - 0.25 * 2f64.ln());
    assert!((two["result"]["energy"].as_f64().unwrap() - oracle).abs() < 1e-9);
    assert_eq!(two["result"]["runs"].as_array().unwrap().len(), 17);
    assert_eq!(two["result"]["config"]["n"], 2);
    let trace = std::fs::read_to_string(&path).unwrap();
    assert!(trace.starts_with("iter,energy,grad_norm\n"));

    let e = json(&["fekete", "--elkies", "--n-max", "4", "--restarts", "2"]);
    assert_eq!(e["result"]["entries"].as_array().unwrap().len(), 3);
    assert_eq!(e["result"]["within_band"], true);
}

#[test]
fn fekete_conjecture_table() {
    let out = renorm(&["--format", "csv", "fekete", "--conjecture", "--n-list", "2,3", "--restarts", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,torus,per_point,embedded_per_point,gap,converged,flagged"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn obstacle_levels() {
    let full = json(&["obstacle", "--disk", "--m", "1", "--h", "0.0078125"]);
    let lvl = &full["result"]["levels"][0];
    assert_eq!(lvl["all_active"], true);
    let area = lvl["area"].as_f64().unwrap();
    assert!((area - std::f64::consts::PI).abs() < 0.02, "{area}");

    let empty = json(&["obstacle", "--disk", "--m", "0.5", "--h", "0.03125"]);
    assert_eq!(empty["result"]["levels"][0]["empty"], true);
    assert_eq!(empty["result"]["levels"][0]["active_cells"], 0);
}

#[test]
fn obstacle_field_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    let out = renorm(&["obstacle", "--polygon", "0", "0", "1", "0", "1", "1", "0", "1", "--m", "0.97", "--h", "0.0625", "--csv", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("x,y,H,active\n"));
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",true")));
}

#[test]
fn obstacle_suites() {
    let p = json(&["obstacle", "--disk", "--suite", "propA1", "--h", "0.03125"]);
    assert_eq!(p["result"]["pass"], true);
    let names: Vec<&str> = p["result"]["verdicts"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    for want in ["monotone_in_m", "bijection", "complementarity"] {
        assert!(names.contains(&want));
    }
    let g = json(&["obstacle", "--disk", "--suite", "gradient-bound", "--h", "0.03125"]);
    assert_eq!(g["result"]["bounded"], true);
    let s = json(&["obstacle", "--disk", "--suite", "scale-law", "--h", "0.03125", "--offsets", "0.1,-0.01"]);
    assert_eq!(s["result"]["records"][1]["status"], "empty_set");
    let e = json(&["obstacle", "--disk", "--suite", "ellipse", "--h", "0.03125", "--offset", "0.1"]);
    assert!(e["result"]["axis_ratio"].as_f64().unwrap() < 1.2);
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let args = ["lattice", "--tau", "0.2", "1.3"];
    let direct = renorm(&args).stdout;
    let mut with_file = vec!["--output", path.to_str().unwrap()];
    with_file.extend(args);
    assert!(renorm(&with_file).stdout.is_empty());
    let written: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let shown: Value = serde_json::from_slice(&direct).unwrap();
    assert_eq!(written["result"], shown["result"]);
}
