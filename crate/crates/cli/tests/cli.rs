use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn law(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../laws");
    root.join(format!("{name}.law.json")).display().to_string()
}

fn matmult(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matmult"))
        .args(args)
        .env_remove("MATMULT_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema_version=1 "));
    lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn validate_sl2() {
    let out = matmult(&["validate", "--law", &law("sl2"), "--require-mean-zero"]);
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "validate");
    assert_eq!(doc["result"]["is_mean_zero"], true);
    assert_eq!(doc["result"]["second_hs_moment"], 2.5);
    assert_eq!(doc["config"]["require_mean_zero"], true);
}

#[test]
fn validate_exit_codes() {
    let identity = matmult(&["validate", "--law", &law("identity2")]);
    assert_eq!(identity.status.code(), Some(0));
    let policy = matmult(&[
        "validate",
        "--law",
        &law("identity2"),
        "--require-mean-zero",
    ]);
    assert_eq!(policy.status.code(), Some(2));
    let missing = matmult(&["validate", "--law", "does/not/exist.law.json"]);
    assert_eq!(missing.status.code(), Some(1));
    let bad_flag = matmult(&["validate", "--no-such-flag"]);
    assert_eq!(bad_flag.status.code(), Some(1));
}

#[test]
fn malformed_law_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.law.json");
    std::fs::write(&path, r#"{"dim": 2, "atoms": [], "weights": []}"#).unwrap();
    let out = matmult(&["validate", "--law", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sieve_cap_exits_3() {
    let out = matmult(&["sieve-stats", "--x", "1e9"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sieve_stats_json_and_csv() {
    let doc = json(&matmult(&["sieve-stats", "--x", "10"]));
    assert_eq!(doc["result"]["squarefree_count"], 7);
    assert_eq!(doc["result"]["hist"], serde_json::json!([1, 4, 2]));
    let rows = csv_rows(&matmult(&["sieve-stats", "--x", "10", "--format", "csv"]));
    assert_eq!(rows[0], ["omega", "count"]);
    assert_eq!(rows[1..], [["0", "1"], ["1", "4"], ["2", "2"]]);
}

#[test]
fn empty_grid_report_is_header_only() {
    let out = matmult(&["report", "--law", &law("sl2"), "--x-grid", "100:10:10"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(
        rows[0].join(","),
        "x,exact,pred_N1,pred_N2,mc,mc_stderr,ratio_exact_over_pred_N2,flags"
    );
}

#[test]
fn rademacher_report_counts_squarefrees() {
    let out = matmult(&[
        "report",
        "--law",
        &law("rademacher"),
        "--x",
        "1e5",
        "--trials",
        "50",
    ]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    let row = &rows[1];
    assert_eq!(row[0], "100000");
    assert_eq!(row[1], "60794");
    let pred_n1: f64 = row[2].parse().unwrap();
    let classical = 6e5 / std::f64::consts::PI.powi(2);
    assert!(
        (pred_n1 / classical - 1.0).abs() < 1e-6,
        "{pred_n1} vs {classical}"
    );
    assert!(row[4].parse::<f64>().unwrap() > 0.0);
    assert_eq!(row[7], "");
}

#[test]
fn report_flags_partial_rows() {
    let out = matmult(&[
        "report",
        "--law",
        &law("sl2"),
        "--x-grid",
        "1:1000:10",
        "--trials",
        "20",
        "--prime-bound",
        "1e4",
        "--mc-max-x",
        "100",
    ]);
    let rows = csv_rows(&out);
    let flags: Vec<&str> = rows[1..].iter().map(|r| r[7].as_str()).collect();
    assert_eq!(flags, ["x_below_2", "", "", "mc_cap"]);
    assert_eq!(rows[1][2], "");
    assert_eq!(rows[4][4], "");

    let uncentered = csv_rows(&matmult(&[
        "report",
        "--law",
        &law("identity2"),
        "--x",
        "100",
        "--trials",
        "20",
        "--prime-bound",
        "1e4",
    ]));
    assert_eq!(uncentered[1][1], "");
    assert_eq!(uncentered[1][7], "not_centered");
}

#[test]
fn report_is_deterministic_across_thread_counts() {
    let args = [
        "report",
        "--law",
        &law("sl2"),
        "--x-grid",
        "100:10000:10",
        "--trials",
        "64",
        "--seed",
        "7",
        "--prime-bound",
        "1e4",
    ];
    let serial = Command::new(env!("CARGO_BIN_EXE_matmult"))
        .args(args)
        .env("MATMULT_THREADS", "1")
        .output()
        .unwrap();
    let parallel = Command::new(env!("CARGO_BIN_EXE_matmult"))
        .args(args)
        .env("MATMULT_THREADS", "4")
        .output()
        .unwrap();
    assert!(serial.status.success() && parallel.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
}

#[test]
fn bad_thread_count_is_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_matmult"))
        .args(["sieve-stats", "--x", "10"])
        .env("MATMULT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mc_is_reproducible_and_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.json");
    let args = [
        "mc",
        "--law",
        &law("sl2"),
        "--x",
        "2000",
        "--trials",
        "40",
        "--seed",
        "3",
        "--prime-bound",
        "1e4",
    ];
    let first = json(&matmult(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let written = matmult(&with_out);
    assert!(written.status.success());
    assert!(written.stdout.is_empty());
    let second: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(first["result"], second["result"]);
    assert_eq!(first["result"]["trials"], 40);
    assert!(first["result"]["exact"].as_f64().unwrap() > 0.0);
}

#[test]
fn constants_sl2() {
    let doc = json(&matmult(&[
        "constants",
        "--law",
        &law("sl2"),
        "--prime-bound",
        "1e5",
    ]));
    let terms = doc["result"]["terms"].as_array().unwrap();
    let lead = &terms[0];
    assert_eq!(lead["m"], 1);
    assert!((lead["lambda"][0].as_f64().unwrap() - (3.0 + 3f64.sqrt()) / 4.0).abs() < 1e-10);
    assert!((lead["C"][0].as_f64().unwrap() - 1.256).abs() < 2e-3);
    assert_eq!(doc["result"]["N"], 2);
}

#[test]
fn unsupported_order_is_input_error() {
    let out = matmult(&[
        "constants",
        "--law",
        &law("sl2"),
        "--N",
        "3",
        "--prime-bound",
        "1e4",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn operator_and_recurrence() {
    let op = json(&matmult(&["operator", "--law", &law("sl2")]));
    assert_eq!(op["result"]["operator"]["l"], 3);
    assert_eq!(
        op["result"]["char_poly"]["coeffs"][0],
        serde_json::json!([-2.0, 0.0])
    );
    let rec = json(&matmult(&[
        "recurrence",
        "--law",
        &law("sl2"),
        "--n-max",
        "12",
    ]));
    assert_eq!(rec["result"]["sequence"]["values"][1], 2.5);
    assert!(rec["result"]["max_residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(rec["result"]["minimal_length"], 2);
}

#[test]
fn exact_rows() {
    let doc = json(&matmult(&[
        "exact",
        "--law",
        &law("rademacher"),
        "--x-grid",
        "10:1000:10",
        "--prime-bound",
        "1e4",
    ]));
    let exact: Vec<f64> = doc["result"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["exact"].as_f64().unwrap())
        .collect();
    assert_eq!(exact, [7.0, 61.0, 608.0]);
    let uncentered = matmult(&[
        "exact",
        "--law",
        &law("identity2"),
        "--x",
        "100",
        "--prime-bound",
        "1e4",
    ]);
    assert_eq!(uncentered.status.code(), Some(2));
}

#[test]
fn jsr_and_ladder() {
    let doc = json(&matmult(&["jsr", "--law", &law("sl2")]));
    let lower = doc["result"]["lower"].as_f64().unwrap();
    let upper = doc["result"]["upper"].as_f64().unwrap();
    assert!(lower <= upper);
    assert!((lower * lower - 1.8173540).abs() < 1e-6);
    let ladder = json(&matmult(&[
        "ladder",
        "--law",
        &law("sl2"),
        "--k-max",
        "2",
        "--n-probe",
        "20",
    ]));
    let rho = ladder["result"]["rho"].as_array().unwrap();
    assert!((rho[0].as_f64().unwrap() - ((3.0 + 3f64.sqrt()) / 4.0).sqrt()).abs() < 1e-10);
    assert!(rho[1].as_f64().unwrap() >= rho[0].as_f64().unwrap());
}

#[test]
fn csv_refused_for_json_commands() {
    let out = matmult(&["validate", "--law", &law("sl2"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
}
