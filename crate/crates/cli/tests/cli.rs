use std::path::PathBuf;
use std::process::{Command, Output};

use qia_cli::DISPATCH;

fn qia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qia")).args(args).output().expect("binary runs")
}

fn qia_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qia")).args(args).env(key, value).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn scratch(name: &str, contents: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

const QUBIT_STATE: &str = r#"{"re": [[0.75, 0.0], [0.0, 0.25]], "im": [[0.0, 0.0], [0.0, 0.0]], "dim": 2}"#;
const HALF: &str = r#"{"re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]], "dim": 2}"#;
const PAULI_X: &str = r#"{"re": [[0.0, 1.0], [1.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]], "dim": 2}"#;
const JOINT: &str = r#"{"X": 2, "Y": 2, "p": [[0.4, 0.1], [0.2, 0.3]]}"#;

/// Every operation of the library API, keyed by name.
const OPERATIONS: &[&str] = &[
    "eig_hermitian",
    "power_on_support",
    "partial_trace",
    "spectral_projector_geq",
    "pinch",
    "dominates",
    "orthogonal",
    "petz_divergence",
    "sandwiched_divergence",
    "mutual_information",
    "mi_variance",
    "rmi",
    "rmi_derivative",
    "g",
    "permutation_unitary",
    "sym_projector",
    "universal_state",
    "twirl",
    "direct_exponent",
    "strong_converse_exponent",
    "thresholds",
    "rate_of_order",
    "forward_cutoff",
    "reverse_cutoff",
    "moderate_rate",
    "second_order_type1",
    "neyman_pearson_min_type1",
    "build_direct_test",
    "build_sc_test",
    "pinched_pair",
    "tilt",
    "min_type1_bounds",
    "worst_case_type2_bounds",
    "classical_renyi_divergence",
    "classical_rmi",
    "cc_state",
    "classical_min_type1",
    "cc_equivalence_check",
];

#[test]
fn every_operation_has_a_command() {
    for op in OPERATIONS {
        assert!(DISPATCH.iter().any(|(_, ops)| ops.contains(op)), "{op} is not reachable");
    }
}

#[test]
fn every_command_runs() {
    let rho = scratch("rho.json", QUBIT_STATE);
    let half = scratch("half.json", HALF);
    let x = scratch("x.json", PAULI_X);
    let joint = scratch("joint.json", JOINT);
    let invocations: Vec<(&str, Vec<&str>)> = vec![
        ("divergence", vec!["divergence", "--copy", "0.75", "--alpha", "2"]),
        ("rmi", vec!["rmi", "--copy", "0.75", "--alpha", "0.5", "--variant", "petz-down-down", "--derivative", "right"]),
        ("exponents", vec!["exponents", "--copy", "0.75", "--steps", "3"]),
        ("thresholds", vec!["thresholds", "--copy", "0.75"]),
        ("order-rate", vec!["order-rate", "--copy", "0.75", "--s", "0.7"]),
        ("cutoff", vec!["cutoff", "--copy", "0.75", "--beta", "-0.5"]),
        ("second-order", vec!["second-order", "--copy", "0.75", "--r", "0.3"]),
        ("hyptest bracket", vec!["hyptest", "bracket", "--copy", "0.75", "--n", "1", "--mu", "0.3"]),
        ("hyptest np", vec!["hyptest", "np", "--rho", &rho, "--sigma", &half, "--mu", "0.5"]),
        ("hyptest build", vec!["hyptest", "build", "--copy", "0.75", "--kind", "direct", "--n", "2", "--rate", "0.05", "--s", "0.6"]),
        ("hyptest pinched", vec!["hyptest", "pinched", "--copy", "0.75", "--n", "1", "--tilt", "2"]),
        ("symmetry info", vec!["symmetry", "info", "--n", "2", "--d", "2", "--perm", "1,0"]),
        ("symmetry twirl", vec!["symmetry", "twirl", "--op", &x, "--n", "1", "--d", "2"]),
        ("classical divergence", vec!["classical", "divergence", "--p", "0.5,0.5", "--q", "0.25,0.75", "--alpha", "2"]),
        ("classical rmi", vec!["classical", "rmi", "--joint", &joint, "--alpha", "1.5"]),
        ("classical embed", vec!["classical", "embed", "--joint", &joint]),
        ("classical bracket", vec!["classical", "bracket", "--copy", "0.75", "--n", "2", "--mu", "0.5"]),
        ("classical check", vec!["classical", "check", "--joint", &joint, "--n", "1", "--mu", "0.5"]),
        ("linalg", vec!["linalg", "--action", "pinch", "--op", &x, "--other", &rho]),
        ("verify", vec!["verify", "--suite", "paper-fixtures"]),
    ];
    for (path, _) in DISPATCH {
        assert!(invocations.iter().any(|(p, _)| p == path), "no invocation for '{path}'");
    }
    for (path, args) in &invocations {
        let out = qia(args);
        assert!(out.status.success(), "{path}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{path}: empty output");
    }
    for action in ["eig", "projector", "support"] {
        assert!(qia(&["linalg", "--action", action, "--op", &x, "--other", &rho]).status.success(), "{action}");
    }
    assert!(qia(&["linalg", "--action", "power", "--op", &rho, "--p", "0.5"]).status.success());
    let product = scratch("product.json", &qia_out(&["classical", "embed", "--joint", &joint]));
    assert!(qia(&["linalg", "--action", "partial-trace", "--op", &product, "--d-a", "2", "--d-b", "2"]).status.success());
    assert!(qia(&["cutoff", "--copy", "0.75", "--beta", "0.5"]).status.success());
    assert!(qia(&["exponents", "--copy", "0.75", "--steps", "2", "--regime", "strong-converse"]).status.success());
}

fn qia_out(args: &[&str]) -> String {
    let out = qia(args);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn outputs_are_deterministic() {
    let runs = [
        vec!["exponents", "--random", "2x2", "--seed", "5", "--steps", "4", "--threads", "2"],
        vec!["rmi", "--random", "2x3", "--seed", "9", "--alpha", "1.5"],
        vec!["hyptest", "bracket", "--random", "2x2", "--seed", "2", "--n", "1", "--mu", "0.4"],
    ];
    for args in runs {
        let first = qia(&args);
        let second = qia(&args);
        assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn curve_csv_written_to_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("curve.csv");
    let p = path.to_string_lossy().into_owned();
    let out = qia(&["exponents", "--copy", "0.75", "--regime", "direct", "--r-min", "0", "--r-max", "1", "--steps", "6", "--out", &p]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "R,exponent,argmax_s,regime");
    assert_eq!(lines.len(), 7);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "0");
    assert!((first[1].parse::<f64>().unwrap() + 0.75f64.ln()).abs() < 1e-9);
    assert_eq!(lines[6].split(',').nth(1), Some("0"));

    let bits = qia_out(&["exponents", "--copy", "0.75", "--r-min", "0", "--r-max", "0", "--steps", "1", "--bits"]);
    let value: f64 = bits.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - (-0.75f64.log2())).abs() < 1e-9);
}

#[test]
fn copy_state_thresholds() {
    let v = stdout_json(&qia(&["thresholds", "--copy", "0.75"]));
    assert!(v["R_half"].as_f64().unwrap().abs() <= 1e-6);
    assert!((v["I"].as_f64().unwrap() - 0.5623351446188083).abs() < 1e-12);
}

#[test]
fn order_one_information_matches_divergence() {
    for seed in ["1", "2"] {
        let d = stdout_json(&qia(&["divergence", "--random", "2x2", "--seed", seed]));
        let r = stdout_json(&qia(&["rmi", "--random", "2x2", "--seed", seed, "--alpha", "1"]));
        let mi = d["mutual_information"].as_f64().unwrap();
        for row in r["results"].as_array().unwrap() {
            assert!((row["value"].as_f64().unwrap() - mi).abs() < 1e-7, "{row}");
        }
    }
}

#[test]
fn exit_codes() {
    let bad = scratch("bad_state.json", r#"{"dim": 2, "re": [[1.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]], "dA": 1, "dB": 2}"#);
    let out = qia(&["thresholds", "--state", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("--state") && msg.contains("'re'"), "{msg}");

    assert_eq!(qia(&["thresholds", "--copy", "1.5"]).status.code(), Some(2));
    assert_eq!(qia(&["thresholds", "--state", "/nonexistent/state.json"]).status.code(), Some(2));
    assert_eq!(qia(&["rmi", "--copy", "0.7", "--alpha", "abc"]).status.code(), Some(2));
    assert_eq!(qia(&["rmi", "--copy", "0.7", "--alpha", "0.7", "--variant", "sandwiched-down-down"]).status.code(), Some(2));
    assert_eq!(qia(&["hyptest", "bracket", "--copy", "0.7", "--n", "1", "--mu", "1.5"]).status.code(), Some(2));
    assert_eq!(qia(&["thresholds"]).status.code(), Some(2));
    assert_eq!(qia(&["thresholds", "--copy", "0.7", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(qia(&["second-order", "--copy", "0.5"]).status.code(), Some(1));

    let capped = qia_env(&["hyptest", "bracket", "--copy", "0.75", "--n", "3", "--mu", "0.5", "--hyp", "mar"], "RENYI_MAX_DIM", "16");
    assert_eq!(capped.status.code(), Some(3), "{}", String::from_utf8_lossy(&capped.stderr));
    assert_eq!(qia_env(&["thresholds", "--copy", "0.7"], "RENYI_MAX_DIM", "lots").status.code(), Some(2));

    assert_eq!(qia(&["verify"]).status.code(), Some(0));
}
