use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn wslcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wslcheck")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn has_solver() -> bool {
    let path = std::env::var("WSLCHECK_SOLVER").unwrap_or_else(|_| "z3".into());
    Command::new(path).arg("-version").output().is_ok_and(|o| o.status.success())
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("wslcli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn check_exit_codes() {
    if !has_solver() {
        return;
    }
    let f = fixture("running/unfold_lseg.sl");
    let o = wslcheck(&["check", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("valid"));

    let dir = tmp("dot");
    let dot = dir.join("m.dot");
    let f = fixture("running/rogue_lseg.sl");
    let o = wslcheck(&["check", f.to_str().unwrap(), "--dot", dot.to_str().unwrap()]);
    assert_eq!(code(&o), 10);
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn json_output() {
    if !has_solver() {
        return;
    }
    let f = fixture("running/rogue_lseg.sl");
    let o = wslcheck(&["--json", "refute", f.to_str().unwrap()]);
    assert_eq!(code(&o), 10);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"], "refuted");
    assert!(v["certificate"].is_object());
}

#[test]
fn parse_errors_exit_2() {
    let dir = tmp("parse");
    let f = dir.join("bad.sl");
    std::fs::write(&f, "data node { node next; };\ncheckentail emp |- ls(x);\n").unwrap();
    let o = wslcheck(&["check", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn bad_arguments_exit_2() {
    let f = fixture("running/unfold_lseg.sl");
    assert_eq!(code(&wslcheck(&["--timeout", "0", "check", f.to_str().unwrap()])), 2);
    assert_eq!(code(&wslcheck(&["--timeout", "abc", "check", f.to_str().unwrap()])), 2);
    assert_eq!(code(&wslcheck(&["--template", "x:y", "check", f.to_str().unwrap()])), 2);
    assert_eq!(code(&wslcheck(&["frobnicate"])), 2);
    assert_eq!(code(&wslcheck(&["--help"])), 0);
}

#[test]
fn validate_model_exit_codes() {
    if !has_solver() {
        return;
    }
    let m = fixture("models/lseg_ray.json");
    let o = wslcheck(&["validate-model", m.to_str().unwrap(), fixture("running/rogue_lseg.sl").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("archetype 2"));
    let o = wslcheck(&["validate-model", m.to_str().unwrap(), fixture("running/unfold_lseg.sl").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("rejected"));
}

#[test]
fn malformed_model_exits_2() {
    let dir = tmp("model");
    let m = dir.join("m.json");
    std::fs::write(&m, "{\"nodes\": 3}").unwrap();
    let o = wslcheck(&["validate-model", m.to_str().unwrap(), fixture("running/rogue_lseg.sl").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn fold_unfold_exit_codes() {
    if !has_solver() {
        return;
    }
    let o = wslcheck(&["fold-unfold", fixture("running/fold_lseg.sl").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("proved"));
    let o = wslcheck(&["fold-unfold", "--budget", "1", fixture("running/rogue_lseg.sl").to_str().unwrap()]);
    assert_eq!(code(&o), 20);
    // theory problems are outside fold/unfold
    let o = wslcheck(&["fold-unfold", fixture("sids/sll_len.sl").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bench_exit_codes() {
    let dir = tmp("bench-empty");
    let o = wslcheck(&["bench", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let _ = std::fs::remove_dir_all(dir);
    if !has_solver() {
        return;
    }
    let dir = tmp("bench-mismatch");
    std::fs::copy(fixture("running/unfold_lseg.sl"), dir.join("u.sl")).unwrap();
    std::fs::write(dir.join("manifest.json"), r#"{"u.sl": "refuted"}"#).unwrap();
    let csv = dir.join("out.csv");
    let o = wslcheck(&["bench", dir.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("mismatch: u.sl"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().nth(1), Some(".,1,1,0,0,0"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn emit_smt_writes_scripts() {
    if !has_solver() {
        return;
    }
    let dir = tmp("emit");
    let o = wslcheck(&[
        "--emit-smt",
        dir.to_str().unwrap(),
        "prove-wsl",
        fixture("running/unfold_lseg.sl").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let n = std::fs::read_dir(&dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "smt2")).count();
    assert!(n >= 1);
    let _ = std::fs::remove_dir_all(dir);
}
