use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn mslab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mslab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(dir: &Path, config: &str, out: &str, extra: &[&str]) -> (i32, Value) {
    let out_path = dir.join(out).to_string_lossy().into_owned();
    let mut args = vec!["run", config, "--out", &out_path];
    args.extend_from_slice(extra);
    let o = mslab(&args);
    let code = o.status.code().unwrap();
    let report = std::fs::read_to_string(&out_path).map(|t| serde_json::from_str(&t).unwrap()).unwrap_or(Value::Null);
    (code, report)
}

#[test]
fn invariance_of_shift_passes_at_every_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"u": [0, 0.5], "orders": [16, 24], "tasks": [
            {"task": "build"},
            {"task": "invariance", "operator": {"kind": "shift"}},
            {"task": "invariance", "operator": {"kind": "k0_k0"}, "expect": "not_invariant"}
        ]}"#,
    );
    let (code, r) = run(dir.path(), &cfg, "r.json", &[]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["pass"], true);
    let inv = &r["tasks"][1]["results"];
    for res in inv.as_array().unwrap() {
        let c = &res["checks"][0];
        assert!(c["value"].as_f64().unwrap() <= c["tol"].as_f64().unwrap());
        assert!(!c["invariant"].as_str().unwrap().is_empty());
    }
    let k = r["tasks"][2]["results"][0]["checks"][0]["value"].as_f64().unwrap();
    assert!((k - 0.75).abs() < 1e-9);
}

#[test]
fn constant_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"u": [1], "orders": [16], "tasks": [{"task": "build"}]}"#);
    let (code, r) = run(dir.path(), &cfg, "r.json", &[]);
    assert_eq!(code, 1);
    let err = r["tasks"][0]["results"][0]["error"].as_str().unwrap();
    assert!(err.contains("not purely contractive"), "{err}");
}

#[test]
fn u_zero_pair_does_not_commute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"u": [0], "orders": [16], "tasks": [{"task": "noncommutative_example"}]}"#);
    let (code, r) = run(dir.path(), &cfg, "r.json", &[]);
    assert_eq!(code, 0, "{r}");
    let checks = r["tasks"][0]["results"][0]["checks"].as_array().unwrap();
    assert!(checks[0]["value"].as_f64().unwrap() <= 1e-9);
    assert!(checks[1]["value"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"u": [0], "orders": [32, 16]}"#);
    let (code, _) = run(dir.path(), &cfg, "r.json", &[]);
    assert_eq!(code, 2);
    let cfg = write(dir.path(), "d.json", r#"{"u": [0], "tasks": [{"task": "unknown"}]}"#);
    assert_eq!(run(dir.path(), &cfg, "r.json", &[]).0, 2);
}

#[test]
fn reports_are_reproducible_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"u": [0.3, 0.4], "orders": [16], "seed": 5, "tasks": [
            {"task": "recover", "operator": {"kind": "random_symbols", "count": 2, "order": 2}},
            {"task": "zero_test", "random": 2}
        ]}"#,
    );
    let (c1, _) = run(dir.path(), &cfg, "a.json", &[]);
    let (c2, _) = run(dir.path(), &cfg, "b.json", &[]);
    assert_eq!((c1, c2), (0, 0));
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let (c3, r3) = run(dir.path(), &cfg, "c.json.out", &["--seed", "6"]);
    assert_eq!(c3, 0);
    assert_eq!(r3["seed"], 6);
    assert_ne!(std::fs::read(dir.path().join("c.json.out")).unwrap(), a);
}

#[test]
fn symbol_files_and_dumps_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.json", r#"{"a": [[0, 0], [1, 0], [0, 0]], "d": {"plain": [[0, 0], [1, 0], [0, 0]]}}"#);
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"u": [0, 0.5], "orders": [16], "tasks": [
            {"task": "recover", "operator": {"kind": "symbol", "symbol": {"file": "f.json"}}}
        ]}"#,
    );
    let (code, r) = run(dir.path(), &cfg, "r.json", &[]);
    assert_eq!(code, 0, "{r}");

    let su = dir.path().join("su.json").to_string_lossy().into_owned();
    assert!(mslab(&["dump", &cfg, "--target", "su", "--out", &su]).status.success());
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&std::fs::read_to_string(&su).unwrap()).unwrap();
    assert_eq!(rows.len(), 3 * 16 + 2 - 16);
    let m = mslab_core::io::matrix_from_rows(&rows).unwrap();
    let again = mslab_core::io::matrix_rows(&m);
    assert_eq!(again, rows);

    let mat_cfg = write(
        dir.path(),
        "m.json",
        r#"{"u": [0, 0.5], "orders": [16], "tasks": [
            {"task": "invariance", "operator": {"kind": "matrix", "file": "su.json"}}
        ]}"#,
    );
    assert_eq!(run(dir.path(), &mat_cfg, "rm.json", &[]).0, 0);

    let k0 = dir.path().join("k0.json").to_string_lossy().into_owned();
    assert!(mslab(&["dump", &cfg, "--target", "k0", "--out", &k0]).status.success());
    let v: Vec<[f64; 2]> = serde_json::from_str(&std::fs::read_to_string(&k0).unwrap()).unwrap();
    let n2: f64 = v.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum();
    assert!((n2 - 1.0).abs() < 1e-9);

    let rec = dir.path().join("rec.json").to_string_lossy().into_owned();
    assert!(mslab(&["dump", &cfg, "--target", "recovered", "--out", &rec]).status.success());
    let rv: Value = serde_json::from_str(&std::fs::read_to_string(&rec).unwrap()).unwrap();
    for e in ["a", "b", "c", "d"] {
        assert!(rv["symbol"].get(e).is_some(), "{rv}");
    }
    assert!(rv["certificate"].as_f64().unwrap() < 1e-9);
}
