use std::process::{Command, Output};

use serde_json::Value;

fn foelner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foelner"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn results(args: &[&str]) -> Value {
    let out = foelner(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["results"].clone()
}

#[test]
fn witness_reports_five_quarters() {
    let r = results(&["witness", "--n", "2", "--k", "8", "--depth", "6"]);
    assert_eq!(r["certified_epsilon"], 1.25);
    assert_eq!(r["per_unitary"].as_array().unwrap().len(), 2);
    assert!((r["limit_epsilon"].as_f64().unwrap() - 1.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn exhaustive_free_ball_respects_floor() {
    let r = results(&["group", "--group", "free:2", "--radius", "2", "--mode", "exhaustive"]);
    assert_eq!(r["ratio_rational"], "12/17");
    assert!(r["ratio_float"].as_f64().unwrap() >= 2.0 / 3.0);
    assert_eq!(r["best_set"].as_array().unwrap().len(), 17);
}

#[test]
fn identity_check_agrees_everywhere() {
    let r = results(&["identity-check", "--trials", "100", "--seed", "1"]);
    assert_eq!(r["agreements"], 100);
    assert!(r["max_discrepancy"].as_f64().unwrap() < 1e-9);
}

#[test]
fn audit_reports_both_thresholds() {
    let r = results(&[
        "--paper-mode",
        "audit",
        "--rank",
        "2",
        "--radius",
        "3",
        "--seed",
        "1",
        "--frames",
        "5",
    ]);
    assert!((r["thresholds"]["paper"].as_f64().unwrap() - 0.142857).abs() < 1e-6);
    assert!((r["thresholds"]["derived"].as_f64().unwrap() - 0.058926).abs() < 1e-6);
    assert_eq!(r["verdict"], "consistent");
}

#[test]
fn csv_rows_for_ball_family() {
    let out = foelner(&[
        "--format", "csv", "group", "--group", "abelian:1", "--radius", "3", "--mode", "balls",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("radius,set_size,boundary_size,ratio_rational"));
    assert!(lines[3].starts_with("3,7,2,2/7,"));
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("foelner-out-{}.json", std::process::id()));
    let out = foelner(&[
        "witness",
        "--n",
        "3",
        "--k",
        "4",
        "--formula-only",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(v["config"]["command"], "witness");
}

#[test]
fn precondition_violations_exit_two() {
    let cases: [&[&str]; 4] = [
        &["scan", "--rank", "2", "--radius", "3"],
        &["group", "--group", "heisenberg:3", "--radius", "2"],
        &["witness", "--n", "1", "--k", "4"],
        &["audit", "--rank", "2", "--radius", "3"],
    ];
    for args in cases {
        let out = foelner(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
