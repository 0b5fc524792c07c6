//! End-to-end runs of the `cvrobust` binary.

use std::path::Path;
use std::process::{Command, Output};

use cvrobust::report::CSV_COLUMNS;

fn cvrobust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvrobust"))
        .args(args)
        .env_remove("CVROBUST_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `quantity -> value` pairs of a JSON envelope.
fn values(json: &str) -> Vec<(String, f64)> {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["schema_version"], 1);
    v["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["quantity"].as_str().unwrap().to_owned(), r["value"].as_f64().unwrap()))
        .collect()
}

fn value(json: &str, quantity: &str) -> f64 {
    values(json)
        .into_iter()
        .find(|(q, _)| q == quantity)
        .unwrap_or_else(|| panic!("no {quantity} in {json}"))
        .1
}

#[test]
fn measure_fock_uses_closed_form() {
    let text = stdout(&cvrobust(&["measure", "--state", "fock:3"]));
    let exact = 3f64.exp() * 6.0 / 27.0;
    assert!((value(&text, "lower") - exact).abs() < 1e-12);
    assert!((value(&text, "upper") - exact).abs() < 1e-12);
}

#[test]
fn coherent_states_are_free() {
    let text = stdout(&cvrobust(&["measure", "--state", "coherent:1.5"]));
    assert_eq!(value(&text, "lower"), 1.0);
    assert_eq!(value(&text, "upper"), 1.0);
}

#[test]
fn tmsv_bracket_is_solved_numerically() {
    let text = stdout(&cvrobust(&[
        "measure",
        "--state",
        "tmsv:lambda=0.5",
        "--free",
        "separable",
        "--solve",
    ]));
    assert!((value(&text, "lower") - 3.0).abs() < 1e-8);
    assert!((value(&text, "upper") - 3.0).abs() < 1e-8);
}

#[test]
fn csv_header_matches_documented_columns() {
    let text = stdout(&cvrobust(&["measure", "--state", "fock:2", "--format", "csv"]));
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "sandwich", "--state", "fock:1", "--dim", "20", "--radius", "5", "--seed", "3",
    ];
    let a = stdout(&cvrobust(&args));
    let b = stdout(&cvrobust(&args));
    assert_eq!(a, b);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"dim": 12}"#).unwrap();
    let text = stdout(&cvrobust(&[
        "measure",
        "--state",
        "fock:1",
        "--dim",
        "30",
        "--config",
        config.to_str().unwrap(),
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["records"][0]["metadata"]["truncation"][0], 12);
}

#[test]
fn corrupted_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"dim": 12, "bogus": true"#).unwrap();
    let output = dir.path().join("out.json");
    let out = cvrobust(&[
        "measure",
        "--state",
        "fock:1",
        "--config",
        config.to_str().unwrap(),
        "-o",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!output.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn unknown_state_exits_2() {
    let out = cvrobust(&["measure", "--state", "banana:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_witness_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("zero.json");
    std::fs::write(&witness, r#"{"rows":2,"cols":2,"data":[[0,0],[0,0],[0,0],[0,0]]}"#).unwrap();
    let out = cvrobust(&[
        "discriminate",
        "--state",
        "fock:1",
        "--dim",
        "2",
        "--witness",
        witness.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn output_dir_names_file_after_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cvrobust"))
        .args(["measure", "--state", "fock:1"])
        .env("CVROBUST_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("measure.json")).unwrap();
    assert!((value(&text, "upper") - 1f64.exp()).abs() < 1e-12);
}

fn witness_round_trip(dir: &Path, name: &str) {
    let witness = dir.join(name);
    let w = witness.to_str().unwrap();
    let common = ["--state", "fock:1", "--dim", "20", "--radius", "5"];
    let sandwich = stdout(&cvrobust(&[&["sandwich", "--witness", w][..], &common].concat()));
    let lower = value(&sandwich, "lower");

    let checked = stdout(&cvrobust(&[&["witness", "--witness", w][..], &common].concat()));
    assert!((value(&checked, "lower") - lower).abs() < 1e-9 * lower);

    let task = stdout(&cvrobust(&[&["discriminate", "--witness", w][..], &common].concat()));
    assert!((value(&task, "advantage_ratio") - lower).abs() < 1e-6 * lower);
}

#[test]
fn witness_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    witness_round_trip(dir.path(), "w.json");
    witness_round_trip(dir.path(), "w.bin");
}
