mod support;

use std::time::Duration;
use support::*;
use wslcheck_core::Formula;
use wslcheck_core::pipeline::{
    certificate_ok, prepare, run_bench, run_check, run_prove, run_refute, Outcome, PipelineError, RunConfig,
};

fn cfg(secs: u64) -> RunConfig {
    RunConfig {
        timeout: Duration::from_secs(secs),
        call_timeout: Duration::from_secs(secs),
        solver: solver(),
        ..RunConfig::default()
    }
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("wsl-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn config_validation() {
    let mut c = cfg(5);
    c.timeout = Duration::ZERO;
    assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
    let mut c = cfg(5);
    c.templates.clear();
    assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
    assert!(run_check(&load("running/unfold_lseg.sl"), &c).is_err());
}

#[test]
fn prepare_rejects_ill_formed_sids() {
    // theory SIDs are fine here; only fragment violations are rejected
    assert!(prepare(&load("sids/sll_len.sl")).is_ok());
    let mut p = lseg_problem();
    let mut def = p.sid.get("lseg").unwrap().clone();
    def.cases.push(Formula::or(vec![Formula::Emp, Formula::Emp]));
    p.sid.insert(def);
    assert!(prepare(&p).is_err());
}

#[test]
fn running_examples() {
    if !solver().is_available() {
        return;
    }
    let c = cfg(30);
    for rel in ["running/unfold_lseg.sl", "running/fold_lseg.sl"] {
        let o = run_check(&load(rel), &c).unwrap();
        assert!(matches!(o, Outcome::Valid(_)), "{rel}: {}", o.label());
    }
    for rel in ["running/rogue_lseg.sl", "running/rogue_lseg_neq.sl"] {
        let p = load(rel);
        match run_check(&p, &c).unwrap() {
            Outcome::Refuted { certificate, .. } => {
                assert!(!certificate.infinite.is_empty());
                assert!(certificate_ok(&prepare(&p).unwrap(), &certificate));
            }
            o => panic!("{rel}: {}", o.label()),
        }
    }
}

#[test]
fn branches_run_alone() {
    if !solver().is_available() {
        return;
    }
    let c = cfg(20);
    assert!(matches!(run_prove(&load("running/unfold_lseg.sl"), &c).unwrap(), Outcome::Valid(_)));
    assert!(matches!(run_refute(&load("running/rogue_lseg.sl"), &c).unwrap(), Outcome::Refuted { .. }));
    let c = cfg(5);
    assert!(!matches!(run_prove(&load("running/rogue_lseg.sl"), &c).unwrap(), Outcome::Valid(_)));
    assert!(!matches!(run_refute(&load("running/unfold_lseg.sl"), &c).unwrap(), Outcome::Refuted { .. }));
}

#[test]
fn empty_bench_dir() {
    let d = tmp("empty-bench");
    let r = run_bench(&d, &cfg(5)).unwrap();
    assert!(r.entries.is_empty() && r.rows.is_empty() && r.mismatches.is_empty());
    assert_eq!(r.resolved_fraction(), 1.0);
    assert_eq!(r.csv(), "category,examples,valid,counter_model,timeout,errors\n");
    let _ = std::fs::remove_dir_all(d);
}

#[test]
fn bench_reports_manifest_mismatches() {
    if !solver().is_available() {
        return;
    }
    let d = tmp("mismatch-bench");
    std::fs::copy(fixture("running/unfold_lseg.sl"), d.join("unfold.sl")).unwrap();
    std::fs::create_dir(d.join("rogue")).unwrap();
    std::fs::copy(fixture("running/rogue_lseg.sl"), d.join("rogue/eq4.sl")).unwrap();
    std::fs::write(
        d.join("manifest.json"),
        r#"{"unfold.sl": "refuted", "rogue/eq4.sl": "refuted", "gone.sl": "valid"}"#,
    )
    .unwrap();
    let r = run_bench(&d, &cfg(30)).unwrap();
    assert_eq!(r.entries.len(), 2);
    let cats: Vec<&str> = r.rows.iter().map(|r| r.category.as_str()).collect();
    assert_eq!(cats, vec![".", "rogue"]);
    assert_eq!(r.rows[0].valid, 1);
    assert_eq!(r.rows[1].counter_model, 1);
    assert_eq!(r.mismatches.len(), 2, "{:?}", r.mismatches);
    assert!(r.mismatches.iter().any(|m| m.starts_with("unfold.sl")));
    assert!(r.mismatches.iter().any(|m| m.starts_with("gone.sl")));
    assert!(r.text().contains("mismatch: "));
    let _ = std::fs::remove_dir_all(d);
}

#[test]
fn bad_manifest_is_a_config_error() {
    let d = tmp("bad-manifest");
    std::fs::write(d.join("manifest.json"), r#"{"a.sl": "maybe"}"#).unwrap();
    assert!(matches!(run_bench(&d, &cfg(5)), Err(PipelineError::Config(_))));
    let _ = std::fs::remove_dir_all(d);
}
