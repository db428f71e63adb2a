use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pairstop() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pairstop"));
    cmd.env_remove("PAIRSTOP_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    pairstop().args(args).output().expect("spawn pairstop")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn without_timestamp(mut doc: Value) -> Value {
    doc["metadata"].as_object_mut().unwrap().remove("timestamp");
    doc
}

fn validate(path: &Path) -> Output {
    run(&["validate", path.to_str().unwrap()])
}

#[test]
fn converge_csv_reproduces_table() {
    let expected = [
        (2000, 0.0572939),
        (4000, 0.0572743),
        (6000, 0.0572678),
        (8000, 0.0572653),
    ];
    let out = run(&["converge", "--ns", "2000,4000,6000,8000", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,b_n,delta,iterations,f_at_root"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for (row, (n, b)) in rows.iter().zip(expected) {
        assert_eq!(row[0].parse::<usize>().unwrap(), n);
        let b_n: f64 = row[1].parse().unwrap();
        assert!((b_n - b).abs() <= 5e-4, "n = {n}: {b_n} vs {b}");
    }
    assert_eq!(rows[0][2], "", "first row has no delta");
}

#[test]
fn constants_at_reference_boundary() {
    let doc = run_json(&["constants", "--b", "0.0573"]);
    let k = &doc["result"]["constants"];
    assert!(
        (k["gamma_hat"].as_f64().unwrap() - 34.91).abs() < 5e-3,
        "{}",
        k["gamma_hat"]
    );
    assert_eq!(k["c7"].as_f64().unwrap(), 100.0);
    assert_eq!(doc["metadata"]["command"], "constants");
    assert_eq!(doc["metadata"]["b"].as_f64().unwrap(), 0.0573);
}

#[test]
fn bare_find_boundary_gives_headline_number() {
    let doc = run_json(&["find-boundary"]);
    let r = &doc["result"];
    assert!((r["b_n"].as_f64().unwrap() - 0.0572939).abs() < 5e-6);
    assert!(r["f_at_root"].as_f64().unwrap().abs() < 1e-3);
    assert!(r["iterations"].as_u64().unwrap() > 0);
    assert_eq!(doc["metadata"]["n"], 2000);
    assert_eq!(doc["metadata"]["params"]["lambda"].as_f64(), Some(10.0));
}

#[test]
fn single_element_is_a_config_error() {
    let out = run(&["solve", "--n", "1", "--b", "0.05"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n:"), "{}", stderr(&out));
}

#[test]
fn missing_b_is_a_config_error() {
    for cmd in ["solve", "constants"] {
        let out = run(&[cmd]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(stderr(&out).contains("b:"), "{}", stderr(&out));
    }
}

#[test]
fn invalid_parameters_name_the_field() {
    for (flag, value, field) in [
        ("--sigma", "0", "sigma"),
        ("--a", "0.1", "a"),
        ("--lambda", "-1", "lambda"),
        ("--tol-b", "0", "tol_b"),
        ("--paths", "0", "paths"),
    ] {
        let out = run(&["find-boundary", flag, value]);
        assert_eq!(out.status.code(), Some(2), "{flag}");
        assert!(stderr(&out).contains(&format!("{field}:")), "{}", stderr(&out));
    }
    let out = run(&["simulate", "--b", "0.05", "--x0", "0.2", "--paths", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("x0:"), "{}", stderr(&out));
}

#[test]
fn bracketing_failure_exits_three() {
    let out = run(&[
        "find-boundary",
        "--b-init",
        "1",
        "--growth",
        "1.0001",
        "--n",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("no sign change"), "{}", stderr(&out));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(&path, r#"{"mu": 4.0, "n": 300, "b": 0.05, "tol_b": 1e-7}"#).unwrap();
    let doc = run_json(&["solve", "--config", path.to_str().unwrap(), "--mu", "8"]);
    assert_eq!(doc["metadata"]["params"]["mu"].as_f64(), Some(8.0));
    assert_eq!(doc["metadata"]["n"], 300);
    assert_eq!(doc["result"]["b"].as_f64(), Some(0.05));
    assert_eq!(doc["result"]["solution"]["x"].as_array().unwrap().len(), 301);
}

#[test]
fn config_file_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    for (text, field) in [
        (r#"{"sigmaa": 0.2}"#, "sigmaa"),
        (r#"{"sigma": "big"}"#, "sigma"),
        (r#"{"n": 1.5}"#, "n"),
        (r#"{"sigma": -0.2}"#, "sigma"),
        ("[1, 2]", "config"),
    ] {
        fs::write(&path, text).unwrap();
        let out = run(&["find-boundary", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(
            stderr(&out).contains(&format!("{field}:")),
            "{text}: {}",
            stderr(&out)
        );
    }
}

#[test]
fn identical_config_gives_identical_json() {
    for args in [
        &["find-boundary", "--n", "300"][..],
        &[
            "simulate",
            "--n",
            "300",
            "--b",
            "0.0573",
            "--x0",
            "-0.05,0.02",
            "--paths",
            "400",
            "--seed",
            "11",
        ][..],
        &["check-conditions", "--n", "300"][..],
    ] {
        let strip = |out: Output| -> String {
            assert!(out.status.success(), "{args:?}: {}", stderr(&out));
            stdout(&out)
                .lines()
                .filter(|l| !l.contains("\"timestamp\""))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let first = strip(run(args));
        let second = strip(run(args));
        assert!(first.len() > 100);
        assert_eq!(first, second, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let args = [
        "simulate", "--n", "300", "--b", "0.0573", "--x0", "0.0", "--paths", "600", "--seed", "3",
    ];
    let one = pairstop()
        .args(args)
        .env("PAIRSTOP_THREADS", "1")
        .output()
        .unwrap();
    let three = pairstop()
        .args(args)
        .env("PAIRSTOP_THREADS", "3")
        .output()
        .unwrap();
    assert!(one.status.success() && three.status.success());
    let a: Value = serde_json::from_slice(&one.stdout).unwrap();
    let b: Value = serde_json::from_slice(&three.stdout).unwrap();
    assert_eq!(without_timestamp(a), without_timestamp(b));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = pairstop()
        .args(["constants", "--b", "0.05"])
        .env("PAIRSTOP_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("PAIRSTOP_THREADS"));
}

#[test]
fn every_result_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 7] = [
        &["solve", "--n", "200", "--b", "0.0573", "--scan-points", "5"],
        &["find-boundary", "--n", "200"],
        &["converge", "--ns", "100,200"],
        &["check-conditions", "--n", "200"],
        &[
            "check-conditions",
            "--n",
            "200",
            "--b",
            "0.06",
            "--integrand",
            "value",
        ],
        &["simulate", "--n", "200", "--paths", "200", "--x0", "-0.1,0.0"],
        &["constants", "--b", "0.0573"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let path = dir.path().join(format!("{i}.json"));
        let mut full = args.to_vec();
        full.extend(["--out", path.to_str().unwrap()]);
        let out = run(&full);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        let check = validate(&path);
        assert!(check.status.success(), "{args:?}: {}", stderr(&check));
        let report: Value = serde_json::from_slice(&check.stdout).unwrap();
        assert_eq!(report["valid"], true);
        assert_eq!(report["command"], args[0]);
    }
}

#[test]
fn validate_rejects_tampered_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fb.json");
    let out = run(&["find-boundary", "--n", "200", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();

    type Tamper = fn(&mut Value);
    let cases: [(&str, Tamper); 4] = [
        ("result.b_n", |d| {
            d["result"].as_object_mut().unwrap().remove("b_n");
        }),
        ("metadata.params.sigma", |d| {
            d["metadata"]["params"]["sigma"] = Value::from(-1.0)
        }),
        ("metadata.tool", |d| d["metadata"]["tool"] = Value::from("other")),
        ("result.iterations", |d| {
            d["result"]["iterations"] = Value::from("many")
        }),
    ];
    for (field, tamper) in cases {
        let mut bad = doc.clone();
        tamper(&mut bad);
        let bad_path = dir.path().join("bad.json");
        fs::write(&bad_path, serde_json::to_string(&bad).unwrap()).unwrap();
        let out = validate(&bad_path);
        assert_eq!(out.status.code(), Some(2), "{field}");
        assert!(stderr(&out).contains(field), "{field}: {}", stderr(&out));
    }
}

#[test]
fn floats_have_at_most_nine_significant_digits() {
    // inspect the emitted text; reparsing through f64 may add digits
    let out = run(&["find-boundary", "--n", "200"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let numbers = text
        .split(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')))
        .filter(|t| t.contains('.'));
    let mut seen = 0;
    for token in numbers {
        let mantissa = token.split(['e', 'E']).next().unwrap();
        let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
        let significant = digits.trim_start_matches('0').trim_end_matches('0');
        assert!(significant.len() <= 9, "{token}");
        seen += 1;
    }
    assert!(seen > 200);
}

#[test]
fn csv_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv_dir = dir.path().join("curves");
    let out = run(&[
        "solve",
        "--n",
        "100",
        "--b",
        "0.0573",
        "--scan-points",
        "4",
        "--scan-from",
        "0.03",
        "--scan-to",
        "0.09",
        "--csv-dir",
        csv_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let solution = fs::read_to_string(csv_dir.join("solve_solution.csv")).unwrap();
    assert!(solution.starts_with("x,v,u\n"));
    assert_eq!(solution.lines().count(), 1 + 101);
    let scan = fs::read_to_string(csv_dir.join("solve_f_n_scan.csv")).unwrap();
    let rows: Vec<Vec<f64>> = scan
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    // F_N changes sign between 0.03 and 0.09
    assert!(rows[0][1] < 0.0 && rows[3][1] > 0.0);
}

#[test]
fn condition_integrand_choice() {
    let stated = run_json(&["check-conditions", "--lambda", "30", "--n", "1000"]);
    let value = run_json(&[
        "check-conditions",
        "--lambda",
        "30",
        "--n",
        "1000",
        "--integrand",
        "value",
    ]);
    assert_eq!(stated["result"]["integrand"], "shifted");
    assert_eq!(stated["result"]["condition_a_holds"], true);
    assert_eq!(value["result"]["integrand"], "value");
    assert_eq!(value["result"]["condition_a_holds"], false);
    assert!(value["result"]["worst_margin"].as_f64().unwrap() < 0.0);
    assert_eq!(stated["result"]["condition_b_holds"], true);
}

#[test]
fn simulate_csv_columns() {
    let out = run(&[
        "simulate", "--n", "300", "--b", "0.0573", "--x0", "-0.02", "--paths", "300", "--format", "csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("x0,mean,std_err,fine_mean,bias_allowance,u_fem,difference,tolerance")
    );
    assert_eq!(lines.count(), 1);
}
