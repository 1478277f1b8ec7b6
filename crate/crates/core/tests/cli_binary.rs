use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn config() -> Value {
    json!({
        "schema": "thin-obstacle/1",
        "n": 1,
        "a": 0.25,
        "R": 1.0,
        "hx": 0.0625,
        "hy": 0.0625,
        "boundary": "oracle:signorini_profile",
        "profile": {"n_angles": 32},
        "free_boundary": {"classify": {"n_angles": 32}},
        "seed": 7
    })
}

fn thinobs(dir: &Path, cfg: &Value, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_thinobs"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--quiet")
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = thinobs(tmp.path(), &config(), &["solve", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["verb"], "solve");
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(files.contains(&"solution.csv") && files.contains(&"thin.csv"));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains(','));
    assert!(!csv.contains('\r'));
    assert!(m["results"]["complementarity"]["min_gap_max"].as_f64().unwrap() < 1e-8);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = thinobs(tmp.path(), &config(), &["diagnose", "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let m = manifest(&a);
    for f in m["files"].as_array().unwrap() {
        let f = f.as_str().unwrap();
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(m["results"]["classification"]["class"], "regular");
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = thinobs(tmp.path(), &config(), &["solve", "--seed", "11", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(manifest(&out)["config"]["seed"], 11);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let out = out.to_str().unwrap();

    let mut bad = config();
    bad["a"] = json!(-0.5);
    assert_eq!(thinobs(tmp.path(), &bad, &["solve", "--out", out]).status.code(), Some(2));

    let mut bad = config();
    bad["schema"] = json!("something-else/9");
    assert_eq!(thinobs(tmp.path(), &bad, &["solve", "--out", out]).status.code(), Some(2));

    let mut slow = config();
    slow["solver"] = json!({"tol": 1e-14, "max_iter": 2});
    let o = thinobs(tmp.path(), &slow, &["solve", "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let mut sweep = config();
    sweep.as_object_mut().unwrap().remove("sweep");
    assert_eq!(thinobs(tmp.path(), &sweep, &["sweep", "--out", out]).status.code(), Some(2));
}

#[test]
fn oracle_and_sweep_verbs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("oracle");
    let o = thinobs(tmp.path(), &config(), &["oracle", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = fs::read_to_string(out.join("oracle_profile.csv")).unwrap();
    assert!(table.lines().count() > 100);

    let mut cfg = config();
    cfg["sweep"] = json!({"parameter": "a", "values": [0.0, 0.5]});
    let out = tmp.path().join("sweep");
    let o = thinobs(tmp.path(), &cfg, &["sweep", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<String> = fs::read_to_string(out.join("sweep.csv")).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0,ok") && rows[2].starts_with("0.5,ok"), "{rows:?}");
}
