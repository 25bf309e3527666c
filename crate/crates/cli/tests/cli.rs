use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatkernel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

#[test]
fn eval_prints_value_then_record() {
    let out = run(&["eval", "interval", "--t", "1", "--x", "1", "--y", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let value: f64 = lines.next().unwrap().parse().unwrap();
    assert!((value - 0.7092216).abs() < 1e-6);
    let record: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(record["schema"], 1);
    assert_eq!(record["value"].as_f64().unwrap(), value);
}

#[test]
fn eval_both_reports_small_difference() {
    let out = run(&[
        "eval", "ball", "--mu", "0.5", "--d", "2", "--t", "0.3", "--x", "0.1,-0.4", "--y",
        "-0.5,0.2", "--both",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let record: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert!(record["abs_diff"].as_f64().unwrap() < 1e-10);
}

#[test]
fn oracle_path_agrees_with_integral() {
    let out = run(&[
        "eval", "simplex", "--kappa", "1,0.5,0", "--t", "1", "--x", "0.2,0.3", "--y", "0.5,0.1",
        "--path", "oracle", "--both",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let record: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert!(record["abs_diff"].as_f64().unwrap() < 1e-9);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["eval", "ball", "--t", "0.5", "--x", "0,0", "--y", "0,0"],
        vec![
            "eval", "interval", "--t", "0.5", "--x", "0.1,0.2", "--y", "0",
        ],
        vec!["eval", "interval", "--t", "abc", "--x", "0", "--y", "0"],
        vec!["envelope-scan", "interval", "--t", ""],
        vec!["frobnicate"],
        vec!["selftest", "--threads", "0"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&out)["kind"], "usage", "{args:?}");
    }
}

#[test]
fn numeric_domain_errors_exit_3() {
    for args in [
        vec![
            "eval", "ball", "--d", "2", "--t", "0.5", "--x", "0.9,0.9", "--y", "0,0",
        ],
        vec!["eval", "interval", "--t", "0.00001", "--x", "0", "--y", "0"],
        vec![
            "eval", "interval", "--alpha", "-2", "--t", "0.5", "--x", "0", "--y", "0",
        ],
        vec![
            "eval",
            "simplex",
            "--kappa",
            "0.5,0.5,0.5",
            "--t",
            "0.5",
            "--x",
            "0.7,0.7",
            "--y",
            "0.1,0.1",
        ],
        vec!["envelope-scan", "interval", "--t", "0.5,2"],
        vec![
            "projector",
            "ball",
            "--d",
            "2",
            "--n",
            "30",
            "--x",
            "0,0",
            "--y",
            "0,0",
            "--path",
            "oracle",
        ],
    ] {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(3),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(error_json(&out)["error"].is_string());
    }
}

#[test]
fn envelope_scan_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_heatkernel"))
        .args([
            "envelope-scan",
            "interval",
            "--t",
            "0.1,1",
            "--pairs",
            "100",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "u,logG,t,x1,y1");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["seed"], 1);
    assert_eq!(report["passed"], true);
    for key in ["c1", "c2", "c3", "c4"] {
        assert!(report["fit"][key].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn negative_control_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_heatkernel"))
        .args([
            "envelope-scan",
            "ball",
            "--d",
            "2",
            "--t",
            "0.1,1",
            "--pairs",
            "200",
            "--negative-control",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["kind"], "invariant");
}

#[test]
fn projector_fixture_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_heatkernel"))
        .args([
            "projector",
            "ball",
            "--mu",
            "1",
            "--d",
            "2",
            "--n",
            "3",
            "--x",
            "0.1,0.2",
            "--y",
            "-0.3,0.4",
            "--both",
        ])
        .args(["--fixture", "basis.json", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let fx: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("basis.json")).unwrap())
            .unwrap();
    let levels = fx["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 4);
    // dim of degree-n polynomials orthogonal to lower degrees in two variables is n+1.
    for (n, level) in levels.iter().enumerate() {
        assert_eq!(level.as_array().unwrap().len(), n + 1);
    }
    let p: heatkernel_core::MultiPoly = serde_json::from_value(levels[2][0].clone()).unwrap();
    assert_eq!(p.dim(), 2);
}

#[test]
fn selftest_quick_passes_and_fault_is_caught() {
    let ok = run(&["selftest"]);
    assert!(ok.status.success());
    let bad = run(&["selftest", "--inject-fault", "norm-constant"]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL jacobi-orthonormality"));
}
