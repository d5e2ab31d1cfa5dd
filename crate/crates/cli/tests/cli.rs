use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn surplus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surplus"))
        .args(args)
        .env_remove("SURPLUS_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = surplus(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn error_of(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    let json: Value = serde_json::from_str(line.trim()).unwrap_or_else(|e| panic!("{e}: {line}"));
    json["error"].clone()
}

const SMALL: [&str; 6] = ["--learner", "ols", "--k", "20", "--folds", "4"];

#[test]
fn csv_round_trip_gives_the_in_memory_result() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ds5.csv");
    let csv = csv.to_str().unwrap();
    ok(&["simulate", "--dataset", "DS5", "--n", "100", "--seed", "3", "--out", csv]);
    assert!(Path::new(&format!("{csv}.manifest.json")).exists());

    let from_csv = dir.path().join("csv.json");
    let direct = dir.path().join("direct.json");
    let mut a = vec!["analyze", "--csv", csv, "--seed", "3", "--out", from_csv.to_str().unwrap()];
    a.extend(SMALL);
    ok(&a);
    let mut b = vec!["analyze", "--dataset", "DS5", "--n", "100", "--seed", "3", "--out", direct.to_str().unwrap()];
    b.extend(SMALL);
    ok(&b);

    let (x, y) = (read_json(&from_csv), read_json(&direct));
    assert_eq!(x["phi"], y["phi"]);
    assert_eq!(x["feature_names"], serde_json::json!(["X1", "X2", "X3"]));
}

#[test]
fn analyze_is_deterministic_and_seed_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, env_seed: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_surplus"));
        cmd.args(["analyze", "--dataset", "DS2", "--n", "150", "--method", "loco", "--repeats", "4"])
            .args(SMALL)
            .arg("--out")
            .arg(&out)
            .env_remove("SURPLUS_SEED");
        match env_seed {
            Some(s) => cmd.env("SURPLUS_SEED", s),
            None => cmd.args(["--seed", "5"]),
        };
        assert!(cmd.output().unwrap().status.success());
        read_json(&out)
    };
    let a = run("a.json", None);
    let b = run("b.json", None);
    let c = run("c.json", Some("5"));
    assert_eq!(a["phi"], b["phi"]);
    assert_eq!(a["phi"], c["phi"]);
    assert_eq!(a["seed"], 5);
    assert_eq!(a["per_feature_diagnostics"].as_array().unwrap().len(), 5);

    let manifest = read_json(&dir.path().join("a.json.manifest.json"));
    assert_eq!(manifest["command"], "analyze");
    assert_eq!(manifest["config"]["method"]["method"], "LOCO");
    assert_eq!(manifest["config"]["method"]["repeats"], 4);
}

#[test]
fn evaluate_scores_a_saved_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let mut a = vec!["analyze", "--dataset", "DS3", "--n", "200", "--out", report.to_str().unwrap()];
    a.extend(SMALL);
    ok(&a);
    let eval = dir.path().join("e.json");
    ok(&[
        "evaluate",
        "--dataset",
        "DS3",
        "--n",
        "200",
        "--report",
        report.to_str().unwrap(),
        "--oracle-n",
        "1000",
        "--learner",
        "ols",
        "--out",
        eval.to_str().unwrap(),
    ]);
    let e = read_json(&eval);
    let s = e.to_string();
    assert!(s.contains("angle") && s.contains("selective"), "{s}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["analyze", "--dataset", "DS9"],
        vec!["analyze", "--dataset", "DS1", "--csv", "x.csv"],
        vec!["analyze", "--dataset", "DS1", "--method", "shap"],
        vec!["analyze", "--dataset", "DS1", "--top-fraction", "0"],
        vec!["analyze", "--dataset", "DS1", "--jobs", "0"],
        vec!["analyze", "--dataset", "DS1", "--k", "not-a-number"],
        vec!["analyze"],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_surplus")).args(&args).current_dir(&dir).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_of(&out)["kind"], "config", "{args:?}");
    }
    // rejected before anything is written
    assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 0);
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = surplus(&[
        "analyze",
        "--dataset",
        "DS1",
        "--n",
        "50",
        "--external-cmd",
        "/nonexistent/learner --flag",
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_of(&out);
    assert_eq!(err["kind"], "runtime");
    assert!(!err["message"].as_str().unwrap().is_empty());
}
