use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocalsim"))
        .args(args)
        .env_remove("NONLOCALSIM_MAX_AMPLITUDES")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_reports_ledger_and_distance() {
    let out = run(&[
        "simulate", "--d", "1", "--m", "8", "--input", "00", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["ledger"]["forward_qubits"], 6.0);
    assert_eq!(v["ledger"]["backward_qubits"], 6.0);
    assert_eq!(v["ledger"]["bits_equiv"], 24.0);
    assert_eq!(v["bound"], 1.0);
    assert_eq!(v["satisfied"], true);
    assert!(stderr(&out).contains("runtime"));
}

#[test]
fn ideal_mode_is_exact() {
    for input in ["00", "phi", "random", "12"] {
        let out = run(&["simulate", "--d", "2", "--mode", "ideal", "--input", input]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let d = stdout_json(&out)["trace_distance"].as_f64().unwrap();
        assert!(d.abs() < 1e-9, "{input}: {d}");
    }
}

#[test]
fn budget_errors_exit_2_with_parameters() {
    let out = run(&["simulate", "--d", "2", "--m", "64", "--backend", "dense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("d=2, m=64"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());

    let out = run(&["simulate", "--d", "2", "--m", "256"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("d=2, m=256"));

    // The environment cap applies when no flag is given.
    let out = Command::new(env!("CARGO_BIN_EXE_nonlocalsim"))
        .args(["simulate", "--d", "1", "--m", "16"])
        .env("NONLOCALSIM_MAX_AMPLITUDES", "1024")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cap is 1024"));
    let out = run(&["simulate", "--max-amplitudes", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["sweep", "--m", ""],
        vec!["sweep"],
        vec!["simulate", "--m", "1"],
        vec!["simulate", "--input", "xyz"],
        vec!["simulate", "--d", "1", "--input", "22"],
        vec!["simulate", "--backend", "gpu"],
        vec!["simulate", "--mode", "exact"],
        vec!["bounds", "--chain", "--c", "2"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn sweep_rows_and_bits_column() {
    let out = run(&[
        "sweep", "--d", "1", "--m", "2,4,8,16", "--trials", "100", "--jobs", "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,m,trials,max_measured_distance,bound,satisfied,fwd_qubits,bwd_qubits,bits_equiv"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let mut last = f64::INFINITY;
    for row in &rows {
        let m: f64 = row[1].parse().unwrap();
        let dist: f64 = row[3].parse().unwrap();
        assert_eq!(row[5], "true");
        assert!((row[8].parse::<f64>().unwrap() - 8.0 * m.log2()).abs() < 1e-9);
        assert!(dist <= last, "max distance grew at m={m}");
        last = dist;
    }
}

#[test]
fn bounds_examples() {
    let out = run(&[
        "bounds",
        "--delta-eps",
        "--d",
        "16",
        "--epsilon",
        "3.8147e-6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    // δ is within 3e-8 of 1/4 here, so Δ sits just below 7 + log₂(0.28125).
    let delta = v[0]["measured"].as_f64().unwrap();
    assert!((delta - 5.169_924_785_999_913).abs() < 1e-9, "{delta}");

    let out = run(&["bounds", "--chain", "--n", "1024", "--c", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let total = v
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["context"]["check"] == "capacity_chain_total")
        .unwrap();
    assert!((total["measured"].as_f64().unwrap() - 120.781_432_225_874_2).abs() < 1e-6);
}

#[test]
fn default_bounds_suite_passes() {
    let out = run(&["bounds", "--jobs", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    let reports = v.as_array().unwrap();
    assert!(reports.len() > 100);
    assert!(reports.iter().all(|r| r["satisfied"] == true));
    for key in ["context", "measured", "bound", "satisfied"] {
        assert!(reports[0].get(key).is_some());
    }
}

#[test]
fn violated_bound_exits_1() {
    // An epsilon far below the protocol's actual error breaks the
    // continuity precondition, which counts as a failed check.
    let out = run(&[
        "bounds",
        "--continuity",
        "--m",
        "4",
        "--epsilon",
        "1e-6",
        "--trials",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("continuity_precondition"));
    let v = stdout_json(&out);
    assert!(v
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["satisfied"] == false));

    let out = run(&["bounds", "--continuity", "--m", "4", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("nonlocalsim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.csv");
    let out = run(&[
        "sweep",
        "--m",
        "2,4",
        "--trials",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}
