mod support;

use std::time::Duration;
use support::*;
use wslcheck_core::encode::{base_signature, encode_entailment, Obligation, Signature};
use wslcheck_core::normalize::normalize;
use wslcheck_core::solver::{emit_smtlib, EmitOptions, Solver, SolverError, SolverVerdict, UnknownReason};

fn obligation(rel: &str) -> Obligation {
    let p = load(rel);
    let e = &normalize(&p, 4096).unwrap()[0];
    let sig = base_signature(&p.vocab.shape.sorts(), &p.sid, &p.vocab.constants);
    encode_entailment(e, &p.sid, &sig, None).unwrap()
}

fn plain() -> EmitOptions {
    EmitOptions { named: false, models: false, timeout_ms: None }
}

#[test]
fn emitted_script_shape() {
    let o = obligation("running/rogue_lseg.sl");
    let text = emit_smtlib(&o, &plain());
    assert!(text.contains("(declare-sort Loc 0)"));
    assert_eq!(text.matches("(assert ").count(), o.assertions.len());
    assert!(text.contains("(check-sat)"));
    // every lseg relation pair is declared
    assert!(text.contains("lseg_fo"));
    assert!(text.contains("lseg_eta"));
}

#[test]
fn emit_is_deterministic() {
    for rel in ["running/unfold_lseg.sl", "running/fold_lseg.sl", "running/rogue_lseg.sl", "running/rogue_lseg_neq.sl"] {
        let a = emit_smtlib(&obligation(rel), &plain());
        let b = emit_smtlib(&obligation(rel), &plain());
        assert_eq!(a, b, "{rel}");
    }
}

#[test]
fn empty_obligation_is_sat() {
    let o = Obligation { signature: Signature::default(), assertions: vec![], refutation: None };
    let text = emit_smtlib(&o, &plain());
    assert!(!text.contains("(assert "));
    let s = solver();
    if !s.is_available() {
        return;
    }
    assert!(s.check(&o, Duration::from_secs(5), false).unwrap().is_sat());
}

#[test]
fn verdicts_on_the_running_examples() {
    let s = solver();
    if !s.is_available() {
        return;
    }
    let v = s.check(&obligation("running/unfold_lseg.sl"), Duration::from_secs(10), false).unwrap();
    assert!(v.is_unsat(), "{v:?}");
    for rel in ["running/rogue_lseg.sl", "running/rogue_lseg_neq.sl"] {
        let v = s.check(&obligation(rel), Duration::from_secs(5), false).unwrap();
        assert!(!v.is_unsat(), "{rel}: {v:?}");
    }
}

#[test]
fn zero_timeout_is_unknown() {
    let v = solver().check(&obligation("running/unfold_lseg.sl"), Duration::ZERO, false).unwrap();
    assert!(matches!(v, SolverVerdict::Unknown(UnknownReason::Timeout)), "{v:?}");
}

#[test]
fn unsat_persists_at_larger_timeouts() {
    let s = solver();
    if !s.is_available() {
        return;
    }
    for rel in ["running/unfold_lseg.sl", "running/fold_lseg.sl"] {
        let o = obligation(rel);
        let short = s.check(&o, Duration::from_secs(5), false).unwrap();
        if short.is_unsat() {
            assert!(s.check(&o, Duration::from_secs(20), false).unwrap().is_unsat(), "{rel}");
        }
    }
}

#[test]
fn spawn_failure_is_an_error() {
    let s = Solver::new("/nonexistent/solver-binary");
    let r = s.check(&obligation("running/unfold_lseg.sl"), Duration::from_secs(1), false);
    assert!(matches!(r, Err(SolverError::Spawn { .. })), "{r:?}");
}

#[test]
fn unsat_cores_name_assertions() {
    let s = solver();
    if !s.is_available() {
        return;
    }
    let o = obligation("running/unfold_lseg.sl");
    match s.check(&o, Duration::from_secs(10), true).unwrap() {
        SolverVerdict::Unsat { core: Some(core) } => {
            assert!(!core.is_empty());
            assert!(core.iter().all(|&i| i < o.assertions.len()));
        }
        v => panic!("{v:?}"),
    }
}

#[cfg(unix)]
#[test]
fn malformed_output_is_not_unknown() {
    use std::os::unix::fs::PermissionsExt;
    let path = std::env::temp_dir().join(format!("wsl-fake-solver-{}", std::process::id()));
    std::fs::write(&path, "#!/bin/sh\ncat > /dev/null\necho banana\n").unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    let r = Solver::new(&path).check(&obligation("running/unfold_lseg.sl"), Duration::from_secs(5), false);
    let _ = std::fs::remove_file(&path);
    assert!(matches!(r, Err(SolverError::Protocol(_))), "{r:?}");
}
