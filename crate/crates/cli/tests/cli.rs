use std::path::PathBuf;
use std::process::Command;

use qexch_cli::{run_subcommand, Invocation, EXIT_PASS, EXIT_USAGE, EXIT_VIOLATION};
use serde_json::Value;

fn run(args: &[&str]) -> Invocation {
    run_subcommand(std::iter::once("qexch").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.code, EXIT_PASS, "{args:?}: {}", out.stderr);
    serde_json::from_str(&out.stdout).unwrap()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn weingarten_table_k2_n4() {
    let v = json(&["weingarten", "table", "--k", "2", "--n", "4"]);
    assert_eq!(v["results"]["index"], serde_json::json!(["1|2", "1,2"]));
    assert_eq!(
        v["results"]["matrix"],
        serde_json::json!([["1/12", "-1/12"], ["-1/12", "1/3"]])
    );
    for key in ["command", "config", "results", "pass"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["config"]["k_max"], 8);
}

#[test]
fn gram_table_k2_n4() {
    let v = json(&["weingarten", "table", "--k", "2", "--n", "4", "--gram"]);
    assert_eq!(
        v["results"]["matrix"],
        serde_json::json!([["16/1", "4/1"], ["4/1", "4/1"]])
    );
}

#[test]
fn haar_moment_value() {
    let v = json(&["haar", "moment", "--n", "4", "--i", "1", "--j", "3"]);
    assert_eq!(v["results"]["value"], "1/4");
}

#[test]
fn nc4_has_fourteen_elements() {
    let v = json(&["partitions", "enum", "--k", "4", "--nc"]);
    assert_eq!(v["results"]["count"], 14);
    let v = json(&["partitions", "enum", "--k", "4"]);
    assert_eq!(v["results"]["count"], 15);
}

#[test]
fn mobius_of_the_full_interval() {
    let v = json(&[
        "partitions",
        "mobius",
        "--sigma",
        "1|2|3|4",
        "--pi",
        "1,2,3,4",
    ]);
    assert_eq!(v["results"]["mobius"], -5);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["weingarten", "table", "--k", "9", "--n", "4"][..],
        &["weingarten", "table", "--k", "2"],
        &[
            "partitions",
            "mobius",
            "--sigma",
            "1,3|2,4",
            "--pi",
            "1,2,3,4",
        ],
        &["haar", "moment", "--n", "4", "--i", "1,2", "--j", "1"],
        &["--bogus"],
        &["--n-range", "9..4", "weingarten", "dk", "--k", "2"],
    ] {
        let out = run(args);
        assert_eq!(out.code, EXIT_USAGE, "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["weingarten", "--help"], &["--version"]] {
        let out = run(args);
        assert_eq!(out.code, EXIT_PASS, "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn classical_model_fails_quantum_invariance() {
    let out = run(&[
        "magic",
        "invariance",
        "--model",
        "tensor-bernoulli",
        "--n",
        "4",
        "--degree",
        "4",
        "--theta",
        "0.6",
    ]);
    assert_eq!(out.code, EXIT_VIOLATION, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["pass"], false);

    let v = json(&[
        "magic",
        "invariance",
        "--model",
        "free",
        "--n",
        "4",
        "--degree",
        "4",
        "--theta",
        "0.6",
    ]);
    assert_eq!(v["pass"], true);
    let v = json(&[
        "magic",
        "invariance",
        "--model",
        "tensor-bernoulli",
        "--n",
        "4",
        "--degree",
        "3",
        "--all-perms",
    ]);
    assert_eq!(v["pass"], true);
}

#[test]
fn magic_validate() {
    assert_eq!(
        json(&["magic", "validate", "--perm", "2,3,1,4"])["pass"],
        true
    );
    assert_eq!(json(&["magic", "validate", "--theta", "0.3"])["pass"], true);
}

#[test]
fn urn_commands() {
    let q = json(&["urn", "quantum", "--lambda", "1,0,2,-1", "--j", "1,2"]);
    let c = json(&["urn", "classical", "--lambda", "1,0,2,-1", "--j", "1,2"]);
    assert_eq!(q["results"]["value"], c["results"]["value"]);
    let gap = json(&[
        "urn",
        "gap",
        "--profile",
        "1,0",
        "--n",
        "8",
        "--j",
        "1,2,1,2",
    ]);
    assert_eq!(gap["pass"], true);
}

#[test]
fn cumulant_files_round_trip() {
    let spec = scratch(
        "semicircle.json",
        r#"{"alphabet":["s"],"k_max":4,"cumulants":{"s,s":"1/1"}}"#,
    );
    let moments = json(&["cumulants", "convert", "--input", spec.to_str().unwrap()]);
    assert_eq!(moments["results"]["output"]["moments"]["s,s,s,s"], "2/1");
    let path = scratch(
        "semicircle-moments.json",
        &moments["results"]["output"].to_string(),
    );
    let back = json(&["cumulants", "convert", "--input", path.to_str().unwrap()]);
    assert_eq!(back["results"]["output"]["cumulants"]["s,s"], "1/1");
    assert_eq!(
        back["results"]["output"]["cumulants"]
            .as_object()
            .unwrap()
            .len(),
        1
    );

    let m = json(&[
        "cumulants",
        "free-moment",
        "--spec",
        spec.to_str().unwrap(),
        "--letters",
        "s,s,s,s",
        "--labels",
        "1,2,1,2",
    ]);
    assert_eq!(m["results"]["value"], "0/1");
}

#[test]
fn rationals_are_reduced_fractions() {
    let v = json(&["weingarten", "table", "--k", "3", "--n", "5"]);
    for row in v["results"]["matrix"].as_array().unwrap() {
        for cell in row.as_array().unwrap() {
            let s = cell.as_str().unwrap();
            let (p, q) = s.split_once('/').unwrap();
            let (p, q): (i64, i64) = (p.parse().unwrap(), q.parse().unwrap());
            assert!(q > 0);
            assert_eq!(num::integer::gcd(p, q), 1, "{s}");
        }
    }
}

#[test]
fn csv_mirrors_the_table() {
    let out = run(&["--csv", "weingarten", "table", "--k", "2", "--n", "4"]);
    assert_eq!(out.code, EXIT_PASS);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert!(lines.len() >= 3);
    assert!(lines[1..].iter().any(|l| l.contains("1/12")));
    assert!(lines[1..].iter().any(|l| l.contains("1/3")));
}

#[test]
fn output_is_deterministic() {
    let args = ["--n-range", "4..6", "--kmax", "4", "reproduce-all"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a, b);
    assert_eq!(a.code, EXIT_PASS, "{}", a.stderr);
    let v: Value = serde_json::from_str(&a.stdout).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn binary_matches_library() {
    let args = ["haar", "moment", "--n", "5", "--i", "1,2", "--j", "1,1"];
    let out = Command::new(env!("CARGO_BIN_EXE_qexch"))
        .args(args)
        .output()
        .unwrap();
    let lib = run(&args);
    assert_eq!(out.status.code(), Some(lib.code));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), lib.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_qexch"))
        .args(["weingarten", "table", "--k", "0", "--n", "4"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
