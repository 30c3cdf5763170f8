use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn collat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collat"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("RUST_LOG", "info")
        .env_remove("COLLAT_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_report(o: &Output) -> Value {
    let mut v: Value = serde_json::from_str(&stdout(o)).expect("stdout is a JSON report");
    v["timing_us"] = Value::from(0);
    v
}

/// Compares against `tests/golden/<name>`; `COLLAT_BLESS=1` rewrites it.
fn golden(name: &str, actual: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("COLLAT_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(actual).unwrap() + "\n").unwrap();
        return;
    }
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(&expected, actual, "golden mismatch for {name}");
}

#[test]
fn cycle_family_golden_reports() {
    for (k, total, nec) in [(3, "8", "4/3"), (7, "12", "2"), (13, "18", "3")] {
        let input = format!("tests/data/cycle_k{k}.json");
        let out = collat(&["solve", &input, "--out", "json"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let report = json_report(&out);
        assert_eq!(report["total"]["value"], total);
        assert_eq!(report["nec"]["value"], nec);
        golden(&format!("solve_cycle_k{k}.json"), &report);
    }
}

#[test]
fn auto_logs_the_solver() {
    let out = collat(&["solve", "tests/data/cycle_k7.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stderr(&out).contains("solver: large-alpha (auto)"),
        "{}",
        stderr(&out)
    );
    let text = stdout(&out);
    assert!(text.contains("total: 12"));
    assert!(text.contains("nec: 2"));
}

#[test]
fn text_mirrors_json() {
    let json = json_report(&collat(&["solve", "tests/data/star.json", "--out", "json"]));
    let text = stdout(&collat(&["solve", "tests/data/star.json"]));
    assert!(text.contains(&format!(
        "total: {} (~{})",
        json["total"]["value"].as_str().unwrap(),
        json["total"]["decimal"].as_str().unwrap()
    )));
    assert_eq!(json["total"]["value"], "5/2");
    for row in json["collaterals"].as_array().unwrap() {
        let line = format!(
            "({}, {})",
            row["enterprise"].as_str().unwrap(),
            row["investor"].as_str().unwrap()
        );
        assert!(text.contains(&line));
    }
    assert!(text.contains(&format!("method: {}", json["method"].as_str().unwrap())));
    assert!(text.contains(&format!(
        "sha256 {}",
        json["inputs"][0]["sha256"].as_str().unwrap()
    )));
}

#[test]
fn check_exit_codes() {
    let ok = collat(&["check", "tests/data/cycle_k7.json"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("status: solvable"));

    let infeasible = collat(&["check", "tests/data/two_cycle.json", "--out", "json"]);
    assert_eq!(infeasible.status.code(), Some(2));
    golden("check_two_cycle.json", &json_report(&infeasible));

    let text = stdout(&collat(&["check", "tests/data/two_cycle.json"]));
    assert!(text.contains("nec: undefined (no viable matrix)"));
    assert!(text.contains("P short 1"));

    let malformed = collat(&["check", "tests/data/malformed.json"]);
    assert_eq!(malformed.status.code(), Some(1));
    assert!(
        stderr(&malformed).contains("line 3"),
        "{}",
        stderr(&malformed)
    );

    let float = collat(&["check", "tests/data/float.json"]);
    assert_eq!(float.status.code(), Some(1));
    assert!(stderr(&float).contains("\"1/2\""));

    let missing = collat(&["check", "tests/data/nope.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn solve_infeasible_exits_two() {
    let out = collat(&["solve", "tests/data/two_cycle.json", "--out", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json_report(&out);
    assert_eq!(r["status"], "infeasible");
    assert_eq!(r["nec"], "infinite");
}

#[test]
fn methods_agree_and_preconditions_are_explained() {
    let star = json_report(&collat(&[
        "solve",
        "tests/data/star.json",
        "--method",
        "star",
        "--out",
        "json",
    ]));
    let exact = json_report(&collat(&[
        "solve",
        "tests/data/star.json",
        "--method",
        "exact",
        "--out",
        "json",
    ]));
    assert_eq!(star["total"], exact["total"]);

    let dag = collat(&["solve", "tests/data/dag.json", "--out", "json"]);
    assert_eq!(json_report(&dag)["nec"]["value"], "1");

    let wrong = collat(&["solve", "tests/data/cycle_k3.json", "--method", "dag"]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(stderr(&wrong).contains("would use the large-alpha solver"));

    let bad = collat(&["solve", "tests/data/star.json", "--method", "fast"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn csv_output() {
    let out = collat(&["solve", "tests/data/star.json", "--out", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("enterprise,investor,amount,collateral,collateral_decimal")
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    let c = c.to_str().unwrap();
    for net in [
        "tests/data/cycle_k7.json",
        "tests/data/star.json",
        "tests/data/dag.json",
    ] {
        let solved = collat(&["solve", net, "--collaterals-file", c]);
        assert_eq!(solved.status.code(), Some(0));
        let out = collat(&["verify", net, c, "--out", "json"]);
        assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
        let r = json_report(&out);
        assert_eq!(r["status"], "viable");
        assert_eq!(r["minimal"], true);
    }
    let zero = collat(&[
        "verify",
        "tests/data/unit_star.json",
        "tests/data/zero_collaterals.json",
    ]);
    assert_eq!(zero.status.code(), Some(2));
    assert!(stdout(&zero).contains("stuck: (k, a) (k, b)"));

    let full = collat(&[
        "verify",
        "tests/data/cycle_k7.json",
        "tests/data/cycle_k7_full.json",
        "--out",
        "json",
    ]);
    assert_eq!(full.status.code(), Some(0));
    let r = json_report(&full);
    assert_eq!(r["minimal"], false);
    assert!(!r["reducible"].as_array().unwrap().is_empty());
}

#[test]
fn gen_is_deterministic_and_self_describing() {
    let a = collat(&[
        "gen",
        "random",
        "--n",
        "10",
        "--d",
        "3",
        "--acyclic",
        "--seed",
        "1",
    ]);
    let b = collat(&[
        "gen",
        "random",
        "--n",
        "10",
        "--d",
        "3",
        "--acyclic",
        "--seed",
        "1",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["meta"]["generator"], "random");
    assert_eq!(doc["meta"]["seed"], 1);

    let k7: Value = serde_json::from_slice(&collat(&["gen", "cycle", "--k", "7"]).stdout).unwrap();
    assert_eq!(k7["vertices"].as_array().unwrap().len(), 9);
    assert_eq!(k7["edges"].as_array().unwrap().len(), 9);
    assert_eq!(k7["vertices"][0]["z"], "8");
    assert_eq!(k7["vertices"][0]["alpha"], "14");

    let ks: Value =
        serde_json::from_slice(&collat(&["gen", "knapsack", "--xs", "2,3,4", "--t", "4"]).stdout)
            .unwrap();
    assert_eq!(ks["vertices"][0]["z"], "9");
    assert_eq!(ks["vertices"][0]["alpha"], "18");
    assert_eq!(ks["edges"][3]["amount"], "5");

    let fvs: Value = serde_json::from_slice(
        &collat(&["gen", "fvs", "--n", "3", "--arcs", "0>1,1>2,2>0"]).stdout,
    )
    .unwrap();
    assert_eq!(fvs["vertices"].as_array().unwrap().len(), 9);

    let bad = collat(&["gen", "cycle", "--k", "2"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("k >= 3"));
    let bad = collat(&["gen", "knapsack", "--xs", "1,1", "--t", "2"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn jobs_flag_and_env() {
    let flag = collat(&[
        "--jobs",
        "2",
        "solve",
        "tests/data/star.json",
        "--out",
        "json",
    ]);
    assert_eq!(flag.status.code(), Some(0));
    let env = Command::new(env!("CARGO_BIN_EXE_collat"))
        .args(["solve", "tests/data/star.json", "--out", "json"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("COLLAT_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(json_report(&flag)["total"], json_report(&env)["total"]);
}
