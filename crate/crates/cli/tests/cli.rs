use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn weilrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weilrep"))
        .args(args)
        .env_remove("WEILREP_JOBS")
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value, String) {
    let out = weilrep(args);
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), v, text)
}

fn checks(v: &Value) -> &Vec<Value> {
    v["checks"].as_array().unwrap()
}

fn status_of<'a>(v: &'a Value, name: &str) -> &'a str {
    checks(v)
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))["status"]
        .as_str()
        .unwrap()
}

fn schema_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json")
}

/// Validates with the Python `jsonschema` package.
fn validate(text: &str) {
    let dir = std::env::temp_dir().join(format!("weilrep-schema-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let doc = dir.join(format!(
        "{:x}.json",
        text.len() ^ text.bytes().map(|b| b as usize).sum::<usize>()
    ));
    std::fs::write(&doc, text).unwrap();
    let script = "import json,sys,jsonschema\njsonschema.validate(json.load(open(sys.argv[2])), json.load(open(sys.argv[1])))";
    let out = Command::new("python3")
        .arg("-c")
        .arg(script)
        .arg(schema_path())
        .arg(&doc)
        .output()
        .expect("python3 available");
    assert!(
        out.status.success(),
        "schema validation failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Largest significant-digit count over float literals in the raw text.
fn max_float_digits(text: &str) -> usize {
    text.split(|c: char| !(c.is_ascii_digit() || "+-.eE".contains(c)))
        .filter(|t| {
            (t.contains('.') || t.contains('e') || t.contains('E')) && t.parse::<f64>().is_ok()
        })
        .map(|t| {
            let mant = t.split(['e', 'E']).next().unwrap();
            let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
            digits.trim_start_matches('0').trim_end_matches('0').len()
        })
        .max()
        .unwrap_or(0)
}

#[test]
fn field_examples_pass() {
    for p in ["3", "5"] {
        let (code, v, text) = report(&["field", "--p", p, "--rank", "1"]);
        assert_eq!(code, 0, "{text}");
        assert_eq!(v["summary"]["failed"], 0);
        assert_eq!(v["summary"]["skipped"], 0);
        assert!(checks(&v)
            .iter()
            .all(|c| !c["anchor"].as_str().unwrap().is_empty()));
        validate(&text);
    }
}

#[test]
fn bad_prime_is_a_usage_error() {
    assert_eq!(weilrep(&["field", "--p", "2"]).status.code(), Some(2));
    assert_eq!(
        weilrep(&["ring", "--r", "1", "--l", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(weilrep(&["bogus"]).status.code(), Some(2));
}

#[test]
fn ring_untwisted_has_three_summands() {
    let (code, v, text) = report(&["ring", "--p", "3", "--r", "1", "--l", "0", "--n", "1"]);
    assert_eq!(code, 0);
    let mut dims: Vec<u64> = v["tables"]["summands"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["dim"].as_u64().unwrap())
        .collect();
    dims.sort();
    assert_eq!(dims, [1, 4, 4]);
    assert_eq!(status_of(&v, "irreducible"), "pass");
    assert_eq!(status_of(&v, "orbit_norm"), "pass");
    validate(&text);
}

#[test]
fn ring_large_group_is_structural() {
    let (code, v, text) = report(&["ring", "--p", "3", "--r", "2", "--l", "1", "--n", "1"]);
    assert_eq!(code, 0);
    assert_eq!(status_of(&v, "irreducible"), "skipped");
    assert_eq!(status_of(&v, "shell.total"), "pass");
    assert_eq!(v["tables"]["summands"].as_array().unwrap().len(), 4);
    assert!(!v["tables"]["shells"].as_array().unwrap().is_empty());
    validate(&text);
}

#[test]
fn torus_examples() {
    let (code, v, text) = report(&[
        "torus",
        "--p",
        "3",
        "--kind",
        "unramified",
        "--uval",
        "0",
        "--n",
        "1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(status_of(&v, "criteria"), "pass");
    validate(&text);
    let (code, v, _) = report(&["torus", "--p", "3", "--kind", "ramified", "--n", "1"]);
    assert_eq!(code, 0);
    assert_eq!(status_of(&v, "criteria"), "pass");
    let (code, v, text) = report(&["torus", "--p", "3", "--kind", "unramified", "--uval", "1"]);
    assert_eq!(code, 0);
    assert_eq!(status_of(&v, "eta0_excluded"), "pass");
    assert_eq!(status_of(&v, "residue.gauss"), "pass");
    validate(&text);
    // rows keyed by (conductor, id)
    let rows = v["tables"]["characters"].as_array().unwrap();
    let keys: Vec<(u64, u64)> = rows
        .iter()
        .map(|r| (r["conductor"].as_u64().unwrap(), r["id"].as_u64().unwrap()))
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn even_truncation_skips_weight_vectors() {
    let (code, v, _) = report(&["torus", "--p", "3", "--uval", "0", "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(status_of(&v, "weight_vectors"), "skipped");
    assert_eq!(status_of(&v, "criteria"), "skipped");
    assert_eq!(status_of(&v, "multiplicity_free"), "pass");
}

#[test]
fn failures_set_the_exit_code() {
    let (code, v, _) = report(&["field", "--p", "3", "--tol", "1e-300"]);
    assert_eq!(code, 1);
    assert!(v["summary"]["failed"].as_u64().unwrap() > 0);
}

#[test]
fn floats_have_at_most_twelve_digits() {
    let (_, _, text) = report(&["torus", "--p", "5", "--kind", "ramified", "--n", "1"]);
    let d = max_float_digits(&text);
    assert!(d > 0 && d <= 12, "{d}");
}

#[test]
fn out_flag_matches_stdout() {
    let path = std::env::temp_dir().join(format!("weilrep-out-{}.json", std::process::id()));
    let out = weilrep(&["field", "--p", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let (_, _, text) = report(&["field", "--p", "3"]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
    std::fs::remove_file(path).ok();
}

#[test]
fn jobs_from_environment() {
    let ok = Command::new(env!("CARGO_BIN_EXE_weilrep"))
        .args(["field", "--p", "3"])
        .env("WEILREP_JOBS", "2")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_weilrep"))
        .args(["field", "--p", "3"])
        .env("WEILREP_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn timing_is_opt_in() {
    let (_, v, _) = report(&["field", "--p", "3"]);
    assert!(v.get("timing").is_none());
    let (_, v, text) = report(&["field", "--p", "3", "--timing"]);
    assert!(v["timing"]["total_seconds"].as_f64().unwrap() >= 0.0);
    validate(&text);
}

#[test]
fn selfcheck_is_deterministic_and_seed_only_moves_samples() {
    let (c1, v1, t1) = report(&["selfcheck"]);
    let (_, _, t2) = report(&["selfcheck"]);
    assert_eq!(c1, 0, "{t1}");
    assert_eq!(t1, t2);
    validate(&t1);
    let (c7, v7, _) = report(&["selfcheck", "--seed", "7"]);
    assert_eq!(c7, 0);
    let verdicts = |v: &Value| {
        checks(v)
            .iter()
            .map(|c| (c["name"].clone(), c["status"].clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(verdicts(&v1), verdicts(&v7));
}
