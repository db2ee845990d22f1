use std::process::{Command, Output};

use serde_json::Value;

fn kphylo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kphylo"))
        .args(args)
        .env_remove("KPHYLO_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = kphylo(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Second column of each data row of a TSV table.
fn column(tsv: &str, col: usize) -> Vec<String> {
    tsv.lines()
        .skip(1)
        .map(|l| l.split('\t').nth(col).unwrap().to_string())
        .collect()
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/output.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&all)).unwrap();
    let errors: Vec<String> = schema().iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}\n{v}");
    v
}

#[test]
fn count() {
    assert_eq!(stdout(&["count", "--k", "2", "--n", "3"]), "3\n");
    assert_eq!(stdout(&["count", "--k", "3", "--n", "4"]), "0\n");
    assert_eq!(stdout(&["count", "--k", "2", "--n", "6"]), "945\n");
}

#[test]
fn census() {
    let t = stdout(&["census", "--k", "2", "--n", "4", "--max-rank", "3"]);
    assert!(t.starts_with("rank\tcount"));
    assert_eq!(column(&t, 1), ["60", "42", "3", "0"]);
    assert_eq!(column(&stdout(&["census", "--k", "2", "--n", "1"]), 1), ["1"]);
    assert_eq!(
        column(&stdout(&["census", "--k", "3", "--n", "5", "--max-rank", "2"]), 1),
        ["50", "20", "0"]
    );
}

#[test]
fn limits() {
    let t = stdout(&["limits", "--k", "2", "--max-rank", "2"]);
    assert_eq!(column(&t, 2), ["1/2", "3/8", "15/128"]);
    assert_eq!(column(&t, 3), ["0.500000000000", "0.375000000000", "0.117187500000"]);
    let t = stdout(&["limits", "--k", "3", "--max-rank", "1"]);
    assert_eq!(column(&t, 2), ["2/3", "26/81"]);
    for k in ["4", "7"] {
        let t = stdout(&["limits", "--k", k, "--max-rank", "0"]);
        let k: u32 = k.parse().unwrap();
        assert_eq!(column(&t, 2), [format!("{}/{k}", k - 1)]);
    }
}

#[test]
fn sample_and_workers() {
    let fig1 = ["((1,2),3);", "((1,3),2);", "((2,3),1);"];
    let t = stdout(&["sample", "--k", "2", "--n", "3", "--count", "2", "--seed", "1"]);
    assert_eq!(t.lines().count(), 2);
    assert!(t.lines().all(|l| fig1.contains(&l)));

    let args = ["sample", "--k", "3", "--n", "21", "--count", "40", "--seed", "9"];
    let one = stdout(&[&args[..], &["--workers", "1"]].concat());
    let eight = stdout(&[&args[..], &["--workers", "8"]].concat());
    assert_eq!(one, eight);
    let env = Command::new(env!("CARGO_BIN_EXE_kphylo"))
        .args(args)
        .env("KPHYLO_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), one);
}

#[test]
fn estimate_deviation() {
    let v = json(&[
        "estimate",
        "--k",
        "2",
        "--n",
        "1001",
        "--samples",
        "200",
        "--seed",
        "7",
        "--max-rank",
        "3",
    ]);
    for row in v["rows"].as_array().unwrap() {
        let d: f64 = row["deviation"].as_str().unwrap().parse().unwrap();
        assert!(d < 0.01, "{row}");
    }
}

#[test]
fn verify_passes() {
    let dump = std::env::temp_dir().join(format!("kphylo-dump-{}.nwk", std::process::id()));
    let t = stdout(&[
        "verify",
        "--k",
        "2",
        "--n-max",
        "8",
        "--dump-newick",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(t.lines().last(), Some("PASS"));
    assert!(t.lines().all(|l| l.starts_with("PASS")));
    // 1 + 1 + 3 + 15 + 105 + 945 + 10395 + 135135 trees for n = 1..=8
    let lines = std::fs::read_to_string(&dump).unwrap().lines().count();
    std::fs::remove_file(dump).ok();
    assert_eq!(lines, 146600);
    let v = json(&["verify", "--k", "3", "--n-max", "7"]);
    assert_eq!(v["passed"], true);
}

#[test]
fn every_command_matches_schema() {
    json(&["count", "--k", "3", "--n", "7"]);
    json(&["census", "--k", "2", "--n", "9", "--max-rank", "2"]);
    json(&["limits", "--k", "5", "--max-rank", "4"]);
    json(&["sample", "--k", "2", "--n", "6", "--count", "3"]);
    json(&[
        "convergence",
        "--k",
        "2",
        "--i",
        "2",
        "--n-grid",
        "3,11,101",
        "--ells",
        "2,3",
    ]);
}

#[test]
fn convergence_grid() {
    let t = stdout(&["convergence", "--k", "2", "--i", "1", "--n-grid", "3,4"]);
    assert_eq!(column(&t, 1), ["2/5", "3/7"]);
}

#[test]
fn exit_codes() {
    assert_eq!(kphylo(&["count", "--k", "1", "--n", "3"]).status.code(), Some(2));
    assert_eq!(kphylo(&["count", "--k", "2", "--n", "0"]).status.code(), Some(2));
    assert_eq!(kphylo(&["sample", "--k", "3", "--n", "4"]).status.code(), Some(2));
    assert_eq!(
        kphylo(&["limits", "--k", "2", "--format", "newick"]).status.code(),
        Some(2)
    );
    assert_eq!(kphylo(&["bogus"]).status.code(), Some(2));
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("kphylo-out-{}.tsv", std::process::id()));
    let out = kphylo(&["count", "--k", "2", "--n", "5", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "105\n");
    std::fs::remove_file(path).ok();
}
