use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cachelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

const MU: &str = r#"{"setup":"multi-user","caches":4,"levels":[{"files":8,"users":2}]}"#;
const SU: &str = r#"{"setup":"single-user","caches":5,"levels":[{"files":4,"users":4},{"files":100,"users":1}]}"#;

#[test]
fn rate_multi_user_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mu.json", MU);
    let o = cachelab(&["rate", &cfg, "--mem", "2", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["achievable"]["exact"], "6");
    assert_eq!(v["lower"]["exact"], "2");
    assert_eq!(v["gap"]["ratio"]["exact"], "3");
    assert_eq!(v["witness"]["partition"]["I"], serde_json::json!([0]));
}

#[test]
fn rate_single_user_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "su.json", SU);
    let o = cachelab(&["rate", &cfg, "--mem", "10"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("achievable: 1 (1)"), "{out}");
    assert!(out.contains("(5/6)"), "{out}");
    assert!(out.contains("gap: 1.2 "), "{out}");
}

#[test]
fn rate_at_zero_memory_serves_every_user() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "su.json", SU);
    let o = cachelab(&["rate", &cfg, "--mem", "0", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["achievable"]["exact"], "5");
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"setup":"multi-user","caches":4,"levels":[],"extra":1}"#,
    );
    assert_eq!(cachelab(&["rate", &bad, "--mem", "1"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        cachelab(&["rate", missing.to_str().unwrap(), "--mem", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn strict_regularity_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "irr.json",
        r#"{"setup":"multi-user","caches":4,"levels":[{"files":7,"users":2}]}"#,
    );
    let o = cachelab(&["rate", &cfg, "--mem", "1", "--strict"]);
    assert_eq!(o.status.code(), Some(3));
    let o = cachelab(&["rate", &cfg, "--mem", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("warning"));
}

#[test]
fn sweep_writes_csv_and_companions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mu.json", MU);
    let out = dir.path().join("s.csv");
    let o = cachelab(&["sweep", &cfg, "--grid", "0:8:5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "M,rate_achievable,rate_lower,gap_ratio,partition_H,partition_I,partition_J"
    );
    assert!(rows[1].starts_with("0,8,"));
    assert!(rows[2].starts_with("2,6,2,3,"));
    assert!(rows[5].starts_with("8,0,0,"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 5);
    assert!(dir.path().join("s.dat").exists());
}

#[test]
fn sweep_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "su.json", SU);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(cachelab(&["sweep", &cfg, "--out", a.to_str().unwrap()])
        .status
        .success());
    let single = Command::new(env!("CARGO_BIN_EXE_cachelab"))
        .env("RAYON_NUM_THREADS", "1")
        .args(["sweep", &cfg, "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(single.status.success());
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn unwritable_output_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mu.json", MU);
    let out = dir.path().join("no/such/dir/s.csv");
    assert_eq!(
        cachelab(&["sweep", &cfg, "--out", out.to_str().unwrap()]).status.code(),
        Some(4)
    );
}

#[test]
fn dichotomy_commands() {
    let o = cachelab(&["dichotomy", "su", "--levels", "4", "--files", "100"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["approx_ratio"]["exact"], "4");

    let o = cachelab(&["dichotomy", "mu", "--r", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ratio: f64 = v["approx_ratio"]["decimal"].as_str().unwrap().parse().unwrap();
    assert!(ratio > 1.0);
}

#[test]
fn mixed_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mixed.json",
        r#"{"setup":"mixed","caches":4,"levels":[{"files":8,"users":2}],"mixed_levels":[{"files":40,"users":4}]}"#,
    );
    let o = cachelab(&["mixed", &cfg, "--mem", "4", "--gamma", "1/2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("gamma: 1/2"));
}

#[test]
fn audit_empty_and_small() {
    let o = cachelab(&["audit", "--setup", "mu", "--count", "0", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("instances=0"));
    let o = cachelab(&["audit", "--setup", "su", "--count", "5", "--seed", "7", "--points", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
