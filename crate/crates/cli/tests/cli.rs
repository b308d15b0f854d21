use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tensorpca"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_report(args: &[&str]) -> (Value, i32) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)));
    (v, out.status.code().unwrap())
}

fn vector(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn matches_up_to_sign(x: &[f64], want: &[f64], tol: f64) -> bool {
    let plus = x.iter().zip(want).all(|(a, b)| (a - b).abs() <= tol);
    let minus = x.iter().zip(want).all(|(a, b)| (a + b).abs() <= tol);
    plus || minus
}

#[test]
fn solve_small_quartic_sdp() {
    let f = data("quartic_3d_small.tensor");
    let (v, code) = json_report(&["solve", f.to_str().unwrap(), "--method", "sdp", "--json"]);
    assert_eq!(code, 0);
    assert_eq!(v["certified"], Value::Bool(true));
    let x = vector(&v["x"][0]);
    assert!(matches_up_to_sign(&x, &[-0.6671, -0.2472, 0.7027], 1e-3), "{x:?}");
    assert!((v["lambda"].as_f64().unwrap() - 0.889322).abs() < 1e-5);
}

#[test]
fn solve_fiber_orientation_nnp() {
    let f = data("fiber_orientation.tensor");
    let (v, code) = json_report(&["solve", f.to_str().unwrap(), "--method", "nnp", "--rho", "10", "--json"]);
    assert_eq!(code, 0);
    let x = vector(&v["x"][0]);
    assert!(matches_up_to_sign(&x, &[0.0116, 0.9992, 0.0382], 1e-3), "{x:?}");
}

#[test]
fn human_report_lines() {
    let f = data("quartic_3d_small.tensor");
    let out = run(&["solve", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for key in [
        "kind",
        "route",
        "method",
        "lambda",
        "x[0]",
        "certified",
        "iterations",
        "converged",
    ] {
        assert!(text.lines().any(|l| l.starts_with(key)), "missing {key}: {text}");
    }
    assert!(text.contains("certified   true"));
}

#[test]
fn malformed_index_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.tensor");
    std::fs::write(
        &p,
        "format_version 1\nkind super_symmetric\ndims 2 2 2 2\nentries 1\n1 1 3 2 1.0\n",
    )
    .unwrap();
    let out = run(&["solve", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn missing_file_exits_one() {
    let out = run(&["solve", "/nonexistent/none.tensor"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_solver_flag_exits_one() {
    let f = data("quartic_3d_small.tensor");
    let out = run(&["solve", f.to_str().unwrap(), "--tol", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn uncertified_solve_exits_two() {
    // A rank tolerance no numerical solve can meet forces the fallback path.
    let f = data("quartic_3d_small.tensor");
    let (v, code) = json_report(&["solve", f.to_str().unwrap(), "--rank-tol", "1e-300", "--json"]);
    assert_eq!(code, 2);
    assert_eq!(v["certified"], Value::Bool(false));
    let x = vector(&v["x"][0]);
    assert!(matches_up_to_sign(&x, &[-0.6671, -0.2472, 0.7027], 1e-3), "{x:?}");
}

#[test]
fn gen_is_deterministic_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tensor");
    let b = dir.path().join("b.tensor");
    for p in [&a, &b] {
        let out = run(&[
            "gen",
            "--n",
            "3",
            "--order",
            "4",
            "--seed",
            "7",
            "-o",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let parsed = tensorpca_cli::format::read_tensor(std::str::from_utf8(&ta).unwrap()).unwrap();
    assert_eq!(tensorpca_cli::format::write_tensor(&parsed).as_bytes(), &ta[..]);

    let (v, code) = json_report(&["solve", a.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    assert_eq!(v["certified"], Value::Bool(true));
}

#[test]
fn gen_to_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.tensor");
    let to_file = run(&[
        "gen",
        "--kind",
        "general",
        "--dims",
        "2,3,4",
        "--seed",
        "3",
        "-o",
        p.to_str().unwrap(),
    ]);
    assert!(to_file.status.success());
    let to_stdout = run(&["gen", "--kind", "general", "--dims", "2,3,4", "--seed", "3"]);
    assert_eq!(to_stdout.stdout, std::fs::read(&p).unwrap());
}

#[test]
fn gen_unwritable_path_exits_one() {
    let out = run(&["gen", "--n", "2", "-o", "/nonexistent/dir/x.tensor"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_requires_dimensions() {
    let out = run(&["gen", "--kind", "partial-symmetric", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_general_and_partial_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.tensor");
    let p = dir.path().join("p.tensor");
    assert!(run(&[
        "gen",
        "--kind",
        "general",
        "--dims",
        "3,3,3",
        "--seed",
        "2",
        "-o",
        g.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&[
        "gen",
        "--kind",
        "partial-symmetric",
        "--n",
        "2",
        "--m",
        "3",
        "-o",
        p.to_str().unwrap()
    ])
    .status
    .success());

    let (v, code) = json_report(&["solve", g.to_str().unwrap(), "--json"]);
    assert_eq!(v["route"], "trilinear");
    assert_eq!(v["x"].as_array().unwrap().len(), 3);
    assert!(code == 0 || code == 2);

    let (v, code) = json_report(&["solve", p.to_str().unwrap(), "--json"]);
    assert_eq!(v["route"], "biquadratic");
    assert_eq!(v["x"].as_array().unwrap().len(), 2);
    assert!(code == 0 || code == 2);
    let (o, _) = json_report(&["oracle", p.to_str().unwrap(), "--json"]);
    assert!((o["value"].as_f64().unwrap() - v["lambda"].as_f64().unwrap()).abs() < 1e-3);
}

#[test]
fn oracle_matches_solver_on_fixture() {
    let f = data("quartic_3d_small.tensor");
    let (v, code) = json_report(&["oracle", f.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    assert_eq!(v["strategy"], "sphere_grid");
    assert!((v["value"].as_f64().unwrap() - 0.889322).abs() < 1e-5);
}

#[test]
fn experiment_smoke_csv() {
    let out = run(&["experiment", "--n", "3", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], tensorpca_cli::experiment::CSV_HEADER);
    assert_eq!(lines.len(), 3);
}

#[test]
fn experiment_deterministic_across_thread_counts() {
    let strip = |out: Output| -> Vec<String> {
        let text = String::from_utf8(out.stdout).unwrap();
        // Drop the machine-dependent wall-time column.
        text.lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                cols.remove(8);
                cols.join(",")
            })
            .collect()
    };
    let args = ["experiment", "--n", "3,4", "--trials", "4", "--seed", "11"];
    let one = bin().args(args).env("TENSORPCA_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("TENSORPCA_THREADS", "4").output().unwrap();
    assert!(one.status.success() && four.status.success());
    let (a, b) = (strip(one), strip(four));
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
    for row in &a[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[5], "4", "rank-one count: {row}");
        assert!(cols[9].parse::<f64>().unwrap() <= 1e-3, "objective gap: {row}");
    }
}

#[test]
fn experiment_biquadratic_requires_m() {
    let out = run(&["experiment", "--family", "biquadratic", "--n", "2", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_fails() {
    let out = run(&["frobnicate"]);
    assert!(!out.status.success());
}
