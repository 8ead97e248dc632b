use std::process::Command;

use perturbe::cli;
use serde_json::Value;

const X: &str = "x=1.3694384060045659";

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("perturbe").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn absorbed_error_exits_zero() {
    let (code, out, _) = run(&["eval", "cos(x) - 0.2 + 10", X]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("injections"), "{out}");
}

#[test]
fn significant_error_exits_ten() {
    let (code, _, _) = run(&["eval", "x - 0.2", "x=0.19999999999999993"]);
    assert_eq!(code, 10);
}

#[test]
fn bad_input_exit_codes() {
    assert_eq!(run(&["eval", "x -", "x=1"]).0, 65);
    assert_eq!(run(&["eval", "sqrt(x)", "x=-1"]).0, 65);
    assert_eq!(run(&["eval", "x + y", "x=1"]).0, 65);
    assert_eq!(run(&["bogus"]).0, 64);
    assert_eq!(run(&["eval", "x", "x=1", "--threshold", "-1"]).0, 64);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn json_report_round_trips() {
    let (code, out, _) = run(&["eval", "cos(x) - 0.2", X, "--output", "json"]);
    assert_eq!(code, 10);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["res_original"].as_f64(), Some(-8.326672684688674e-17));
    assert_eq!(v["res_perturbed"].as_f64(), Some(-1.1102230246251565e-16));
    assert_eq!(v["injections"].as_u64(), Some(1));
    let events = v["events"].as_array().unwrap();
    assert_eq!(events.len(), 2);
    assert_eq!(events[1]["op"], "sub");
    assert_eq!(events[1]["perturbed_operand"], "left");
}

#[test]
fn non_finite_values_serialize_as_strings() {
    let (_, out, _) = run(&["eval", "1 / (x - 0.2)", "x=0.2", "--output", "json"]);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["exceptional"], true);
    assert_eq!(v["res_original"], "inf");
}

#[test]
fn validate_follows_the_oracle() {
    let (code, out, _) = run(&["validate", "cos(x) - 0.2", X, "--output", "json"]);
    assert_eq!(code, 10);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    let ulps = v["oracle"]["err_ulp"].as_f64().unwrap();
    assert!((ulps / 1.0143e15 - 1.0).abs() < 1e-2, "{ulps}");
    assert_eq!(v["agree"], true);
    let (code, _, _) = run(&["validate", "cos(x) - 0.2 + 10", X]);
    assert_eq!(code, 0);
}

#[test]
fn solve_inline_systems() {
    let (code, out, _) = run(&["solve", "--matrix", "1.0001 1; 1 1", "--b", "2.0001,2", "--output", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    let x: Vec<f64> = v["x"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect();
    assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10, "{x:?}");

    let (code, out, _) = run(&["solve", "--matrix", "4", "--b", "2", "--output", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["x"][0].as_f64(), Some(0.5));

    assert_eq!(run(&["solve", "--matrix", "0", "--b", "1"]).0, 65);
    assert_eq!(run(&["solve", "--matrix", "1 2; 3 4", "--b", "1"]).0, 64);
}

#[test]
fn sweep_output_is_independent_of_jobs() {
    let base = ["sweep", "cos(x) - 0.2", "--center", "1.3694384060045659", "--points", "40", "--output", "csv"];
    let one = run(&[&base[..], &["--jobs", "1"]].concat());
    let four = run(&[&base[..], &["--jobs", "4"]].concat());
    assert_eq!(one.1, four.1);
    assert_eq!(one.1.lines().count(), 1 + 81);
}

#[test]
fn linear_experiment_is_independent_of_jobs() {
    let base = ["solve", "--n", "12", "--count", "6", "--validate", "--output", "csv"];
    let one = run(&[&base[..], &["--jobs", "1"]].concat());
    let three = run(&[&base[..], &["--jobs", "3"]].concat());
    assert_eq!(one.1, three.1);
    assert_eq!(one.1.lines().count(), 1 + 6);
}

#[test]
fn corpus_matches_expectations() {
    let (code, out, err) = run(&["corpus", "--output", "csv", "--jobs", "2"]);
    assert_eq!(code, 0, "{out}{err}");
}

#[test]
fn binary_reads_environment_overrides() {
    let bin = env!("CARGO_BIN_EXE_perturbe");
    let status = Command::new(bin)
        .args(["eval", "x - 0.2", "x=0.19999999999999993"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(10));
    let status = Command::new(bin)
        .args(["eval", "x - 0.2", "x=0.19999999999999993"])
        .env("PERTURBE_THRESHOLD", "1e20")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
