use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cereduce");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).env_remove("CEREDUCE_TOL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn walk_reduce_verify_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["zoo", "walk", "--n", "4", "--seed", "7", "-o", "walk4.json"]).status.code(), Some(0));
    let o = run(d, &["reduce", "walk4.json", "-o", "walk4.red.json", "--report", "text"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("reduced dim 4 / original 16"), "{}", stdout(&o));
    let o = run(d, &["verify", "walk4.json", "walk4.red.json", "--max-len", "4", "--report", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["max_dev"].as_f64().unwrap() <= 1e-8);
    // a reduced model is an ordinary model
    let o = run(d, &["simulate", "walk4.red.json", "--steps", "5", "--samples", "50", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(d, &["reduce", "walk4.red.json", "-o", "again.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn ising_blocks_and_tv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(d, &["zoo", "ising", "--n", "4", "--p", "0", "--delta", "0.3", "-o", "ising_n4_p0.json"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(d, &["reduce", "ising_n4_p0.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("blocks [[2,2],[2,2],[2,2],[2,2]]"), "{}", stdout(&o));
    assert!(d.join("ising_n4_p0.red.json").exists());
    let o = run(d, &["verify", "ising_n4_p0.json", "ising_n4_p0.red.json", "--max-len", "3", "--tv", "3", "--report", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["total_variation"]["max_tv"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn json_report_carries_seed_and_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["zoo", "ising", "--n", "4", "--p", "0.5", "-o", "m.json"]);
    let o = run(d, &["reduce", "m.json", "--report", "json", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["provenance"]["seed"], 3);
    assert_eq!(v["provenance"]["tol"], 1e-9);
    assert_eq!(v["provenance"]["reduced_dim"], 32);
    assert_eq!(v["decomposition"]["blocks"], serde_json::json!([[4, 2], [4, 2]]));
    assert_eq!(v["assumptions"]["a1"]["holds"], true);
}

#[test]
fn corrupted_reduced_model_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["zoo", "walk", "--n", "3", "-o", "w.json"]);
    run(d, &["reduce", "w.json"]);
    // Swap the instrument maps of two outcomes: still a valid instrument, wrong model.
    let text = std::fs::read_to_string(d.join("w.red.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let inst = v["instrument"].as_object_mut().unwrap();
    let a = inst["0"].clone();
    inst.insert("0".into(), inst["1"].clone());
    inst.insert("1".into(), a);
    std::fs::write(d.join("bad.json"), serde_json::to_string(&v).unwrap()).unwrap();
    let o = run(d, &["verify", "w.json", "bad.json", "--max-len", "2"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("worst case"), "{}", stdout(&o));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(d, &["zoo", "ising", "--n", "3", "--p", "0.5", "--delta", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("N >= 4 required"), "{}", stderr(&o));

    std::fs::write(d.join("trunc.json"), "{\"dim\": 2,\n \"outcomes\": [").unwrap();
    let o = run(d, &["reduce", "trunc.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    // 0.9 * identity: not trace preserving
    let broken = r#"{"dim": 2, "outcomes": ["0"],
        "instrument": {"0": {"kraus": [[[[0.9, 0], [0, 0]], [[0, 0], [0.9, 0]]]]}},
        "observables": [{"name": "I", "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}]}"#;
    std::fs::write(d.join("broken.json"), broken).unwrap();
    let o = run(d, &["reduce", "broken.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("normalization residual"), "{}", stderr(&o));

    let o = run(d, &["reduce", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(d, &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dimension_incompatible_pair_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["zoo", "walk", "--n", "3", "-o", "w3.json"]);
    run(d, &["zoo", "walk", "--n", "4", "-o", "w4.json"]);
    run(d, &["reduce", "w4.json"]);
    let o = run(d, &["verify", "w3.json", "w4.red.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn tolerance_env_var_overrides_default() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["zoo", "walk", "--n", "3", "-o", "w.json"]);
    let o = Command::new(BIN)
        .current_dir(d)
        .args(["reduce", "w.json", "--report", "json"])
        .env("CEREDUCE_TOL", "1e-7")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["provenance"]["tol"], 1e-7);
    let o = Command::new(BIN).current_dir(d).args(["reduce", "w.json"]).env("CEREDUCE_TOL", "-1").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hadamard_walk_splits_evenly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["zoo", "walk", "--n", "2", "--hadamard", "-o", "h.json"]);
    let o = run(d, &["simulate", "h.json", "--steps", "2", "--samples", "100000", "--seed", "1", "-o", "rec.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let second = v["per_step"][1]["1"].as_f64().unwrap();
    assert!((second - 0.5).abs() <= 0.005, "{second}");
    let lines = std::fs::read_to_string(d.join("rec.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 100000);
}
