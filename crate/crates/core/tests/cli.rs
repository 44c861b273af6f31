//! The binary's exit codes and output formats.

use std::process::{Command, Output};

fn treepath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treepath"))
        .args(args)
        .env_remove("TREEPATH_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn result<'a>(v: &'a serde_json::Value, name: &str) -> &'a serde_json::Value {
    v["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == name)
        .unwrap_or_else(|| panic!("no result {name}"))
}

#[test]
fn exact_survival() {
    let out = treepath(&["exact", "--what", "survival", "-N", "2", "-p", "0.75"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "exact");
    let s = result(&v, "survival")["value"].as_f64().unwrap();
    assert!((s - 2.0 / 3.0).abs() < 1e-9);
    let out = treepath(&["exact", "--what", "survival", "-N", "2", "-p", "0.5"]);
    assert_eq!(result(&json(&out), "survival")["value"].as_f64(), Some(0.0));
}

#[test]
fn exit_codes() {
    assert_eq!(treepath(&["--help"]).status.code(), Some(0));
    assert_eq!(treepath(&["--version"]).status.code(), Some(0));
    assert_eq!(treepath(&["exact", "--what", "bogus"]).status.code(), Some(1));
    assert_eq!(
        treepath(&["exact", "--what", "survival", "-N", "2", "-p", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(treepath(&["verify", "--only", "no-such-check"]).status.code(), Some(1));

    let guarded = treepath(&[
        "simulate",
        "--stat",
        "longest-increasing",
        "-N",
        "2",
        "-n",
        "25",
        "-K",
        "1",
    ]);
    assert_eq!(guarded.status.code(), Some(2));
    let capped = treepath(&[
        "simulate",
        "--stat",
        "theta",
        "-N",
        "2",
        "-n",
        "30",
        "-p",
        "0.95",
        "-K",
        "4",
        "--work-cap",
        "100",
    ]);
    assert_eq!(capped.status.code(), Some(2));

    assert_eq!(treepath(&["verify", "--only", "critical"]).status.code(), Some(0));
    let faulty = treepath(&["verify", "--only", "3", "--inject-fault"]);
    assert_eq!(faulty.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&faulty.stderr).contains("FAIL [ 3]"));
}

#[test]
fn verify_record_lists_criteria() {
    let out = treepath(&["verify", "--only", "oracle-triangle,pair-counts"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ids: Vec<i64> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["name"] == "criterion")
        .map(|r| r["index"].as_i64().unwrap())
        .collect();
    assert_eq!(ids, vec![6, 7]);
    assert_eq!(result(&v, "all_pass")["value"].as_f64(), Some(1.0));
}

#[test]
fn seed_from_environment() {
    let args = [
        "simulate",
        "--stat",
        "longest-open",
        "-N",
        "2",
        "-n",
        "6",
        "-p",
        "0.5",
        "-K",
        "200",
    ];
    let run = |seed: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_treepath"));
        cmd.args(args).args(extra).env_remove("TREEPATH_SEED");
        if let Some(s) = seed {
            cmd.env("TREEPATH_SEED", s);
        }
        json(&cmd.output().unwrap())
    };
    let from_env = run(Some("42"), &[]);
    let from_flag = run(None, &["--seed", "42"]);
    assert_eq!(from_env["results"], from_flag["results"]);
    assert_eq!(from_env["meta"]["base_seed"], 42);
    let overridden = run(Some("42"), &["--seed", "43"]);
    assert_ne!(overridden["results"], from_flag["results"]);
}

#[test]
fn csv_and_out_file() {
    let dir = std::env::temp_dir().join(format!("treepath-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("law.csv");
    let out = treepath(&[
        "exact",
        "--what",
        "theta-pmf",
        "-N",
        "2",
        "-n",
        "1",
        "-p",
        "0.5",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rows.headers().unwrap(),
        vec!["command", "name", "index", "value", "exact"]
    );
    let mass: Vec<(i64, f64)> = rows
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[1] == "mass")
        .map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect();
    assert_eq!(mass, vec![(0, 0.625), (1, 0.25), (2, 0.125)]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_emits_long_csv() {
    let out = treepath(&[
        "sweep", "--vary", "prob", "--values", "0.3,0.75", "--", "exact", "--what", "survival", "-N", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("command,prob,name,index,value,exact"));
    let rows: Vec<&str> = lines.filter(|l| l.contains("survival")).collect();
    assert_eq!(rows.len(), 2);
}
