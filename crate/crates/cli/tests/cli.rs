use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldp")).args(args).output().unwrap()
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn canned(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const ESCAPE_IID: &str = r#"{
  "seed": 1,
  "model": { "kind": "iid", "law": { "components": [[{ "lo": [0], "hi": [1] }, 1.0]] } },
  "escape-probe": { "interval": [0, 1], "kappa": 0.5, "n_grid": [2, 4], "samples": 100 }
}"#;

#[test]
fn missing_seed_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "c.json", r#"{"simulate": {"n": 3}, "model": {"kind": "uniform_step"}}"#);
    let o = ldp(&["simulate", "--config", c.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "c.json", "{\n  \"seed\": 1,\n  \"simulate\": {\"n\": 3, \"lenght\": 4}\n}");
    let o = ldp(&["simulate", "--config", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("lenght") && err.contains("line 3"), "{err}");
}

#[test]
fn task_mismatch_and_missing_section_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "c.json", r#"{"task": "classes", "seed": 1}"#);
    assert_eq!(ldp(&["simulate", "--config", c.to_str().unwrap()]).status.code(), Some(2));
    let out = dir.path().join("out");
    assert_eq!(
        ldp(&["classes", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn failed_verdict_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "c.json", ESCAPE_IID);
    let out = dir.path().join("out");
    let o = ldp(&["escape-probe", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    assert!(out.join("escape-probe_decay.csv").exists());
}

#[test]
fn two_class_example_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = ldp(&["classes", "--config", &canned("two-class-example.json"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("classes_table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("2,") && rows[1].ends_with(",true,1"), "{}", rows[1]);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("classes.json")).unwrap()).unwrap();
    assert_eq!(doc["result"]["order"], serde_json::json!(["2⤳1"]));
    assert_eq!(doc["config"]["seed"], 3);
}

#[test]
fn seed_flag_overrides_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "c.json",
        r#"{"seed": 1, "model": {"kind": "uniform_step"}, "simulate": {"n": 4, "paths": 2}}"#,
    );
    let out = dir.path().join("out");
    let run = |seed: &str| {
        let o = ldp(&["simulate", "--config", c.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read_to_string(out.join("simulate.json")).unwrap()
    };
    let a = run("8");
    assert!(a.contains("\"seed\": 8"));
    assert_ne!(a, run("9"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = ldp(&[
            "estimate-rate",
            "--config",
            &canned("uniform-rate.json"),
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        files(&out)
    };
    let a = run("a", "1");
    assert_eq!(a.len(), 3);
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "4"));
}
