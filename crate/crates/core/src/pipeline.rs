//! End-to-end runs: fragment checks, normalisation, encoding, and the race
//! between proving (solver unsat) and refuting (certified models).

use crate::encode::{base_signature, encode_entailment, EncodeError, Obligation};
use crate::foldunfold::{prove, FoldUnfoldError, ProveConfig, ProveOutcome};
use crate::normalize::{inline_points_to_existentials, inline_sid, normalize, NormalizeError, NormalizedEntailment, DEFAULT_BLOWUP_LIMIT};
use crate::rogue::{certify, CandidateModel, Certificate, CertifyOptions, RogueError, Rogueness};
use crate::sl::{check_sid, is_heap_reducing, FragmentError, Problem};
use crate::solver::{Solver, SolverError, SolverVerdict};
use crate::symbolic::{find_model, SymbolicError, SymbolicStructure, TemplateSpec};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};
use thiserror::Error;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    FoldUnfold(#[from] FoldUnfoldError),
    #[error("internal error: {0}")]
    Conflict(String),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Wall-clock budget for one problem.
    pub timeout: Duration,
    /// Limit for a single solver call.
    pub call_timeout: Duration,
    pub templates: Vec<TemplateSpec>,
    pub solver: Solver,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            timeout: DEFAULT_TIMEOUT,
            call_timeout: DEFAULT_TIMEOUT,
            templates: TemplateSpec::default_family(),
            solver: Solver::from_env(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.timeout.is_zero() || self.call_timeout.is_zero() {
            return Err(PipelineError::Config("timeouts must be positive".into()));
        }
        if self.templates.is_empty() {
            return Err(PipelineError::Config("no templates given".into()));
        }
        Ok(())
    }
}

/// A problem after fragment checks, split into normalised entailments with
/// their obligations.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub splits: Vec<NormalizedEntailment>,
    /// Obligations with points-to determined existentials inlined.
    pub obligations: Vec<Obligation>,
    pub heap_reducing: bool,
    pub disjunct_names: Vec<Vec<String>>,
}

pub fn prepare(p: &Problem) -> Result<Prepared, PipelineError> {
    check_sid(&p.sid)?;
    let splits = normalize(p, DEFAULT_BLOWUP_LIMIT)?;
    let fs = p.vocab.shape.sorts();
    let sig = base_signature(&fs, &p.sid, &p.vocab.constants);
    let isid = inline_sid(&p.sid, &fs);
    let mut obligations = vec![];
    let mut names = vec![];
    for e in &splits {
        let ie = inline_points_to_existentials(e, &fs);
        obligations.push(encode_entailment(&ie, &isid, &sig, None)?);
        names.push(e.disjuncts.iter().map(|d| d.pretty(&p.vocab.shape).to_string()).collect());
    }
    Ok(Prepared { problem: p.clone(), splits, obligations, heap_reducing: is_heap_reducing(&p.sid), disjunct_names: names })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidEvidence {
    pub splits: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Valid(ValidEvidence),
    Refuted { split: usize, certificate: Box<Certificate> },
    Unknown { diagnostics: Vec<String> },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Valid(_) => "valid",
            Outcome::Refuted { .. } => "refuted",
            Outcome::Unknown { .. } => "unknown",
        }
    }
}

fn certify_opts<'a>(prep: &'a Prepared, k: usize, solver: &'a Solver, timeout: Duration) -> CertifyOptions<'a> {
    CertifyOptions {
        solver,
        timeout,
        sid: Some(&prep.problem.sid),
        heap_reducing: prep.heap_reducing,
        disjunct_names: prep.disjunct_names[k].clone(),
    }
}

/// Solver check of every split. Valid needs every split unsat; a finite
/// model for any split is certified and refutes.
pub fn prover_branch(prep: &Prepared, cfg: &RunConfig, solver: &Solver, start: Instant) -> Result<Outcome, PipelineError> {
    let mut diags = vec![];
    for (k, o) in prep.obligations.iter().enumerate() {
        let left = cfg.timeout.saturating_sub(start.elapsed()).min(cfg.call_timeout);
        if left.is_zero() {
            diags.push(format!("prover: split {} not attempted (timeout)", k + 1));
            return Ok(Outcome::Unknown { diagnostics: diags });
        }
        match solver.check(o, left, false)? {
            SolverVerdict::Unsat { .. } => {}
            SolverVerdict::Sat { model: Some(m), .. } => {
                let opts = certify_opts(prep, k, solver, left.max(Duration::from_secs(5)));
                match certify(CandidateModel::Finite(m), o, &opts) {
                    Ok(c) => return Ok(Outcome::Refuted { split: k, certificate: Box::new(c) }),
                    Err(e) => {
                        diags.push(format!("prover: split {}: solver model not certified: {e}", k + 1));
                        return Ok(Outcome::Unknown { diagnostics: diags });
                    }
                }
            }
            SolverVerdict::Sat { model: None, .. } => {
                diags.push(format!("prover: split {}: satisfiable, model not finite-readable", k + 1));
                return Ok(Outcome::Unknown { diagnostics: diags });
            }
            SolverVerdict::Unknown(r) => {
                diags.push(format!("prover: split {}: {r}", k + 1));
                return Ok(Outcome::Unknown { diagnostics: diags });
            }
        }
    }
    Ok(Outcome::Valid(ValidEvidence { splits: prep.obligations.len(), elapsed_ms: start.elapsed().as_millis() as u64 }))
}

/// Template search for a symbolic model of some split.
pub fn refuter_branch(prep: &Prepared, cfg: &RunConfig, solver: &Solver, start: Instant) -> Result<Outcome, PipelineError> {
    let mut diags = vec![];
    let n = prep.obligations.len();
    for (k, o) in prep.obligations.iter().enumerate() {
        let left = cfg.timeout.saturating_sub(start.elapsed());
        if left.is_zero() {
            break;
        }
        // Share the remaining time evenly among the remaining splits.
        let slice = left / (n - k) as u32;
        match find_model(o, &cfg.templates, solver, slice)? {
            Some(found) => {
                let opts = certify_opts(prep, k, solver, Duration::from_secs(10));
                match certify(CandidateModel::Symbolic(found.structure), o, &opts) {
                    Ok(c) => return Ok(Outcome::Refuted { split: k, certificate: Box::new(c) }),
                    Err(RogueError::Symbolic(e)) => return Err(e.into()),
                    Err(e) => return Err(PipelineError::Conflict(format!("template model failed certification: {e}"))),
                }
            }
            None => diags.push(format!("refuter: split {}: no template model", k + 1)),
        }
    }
    Ok(Outcome::Unknown { diagnostics: diags })
}

enum Branch {
    Prover,
    Refuter,
}

/// Run prover and refuter concurrently; the first conclusive result wins
/// and cancels the other. A Valid and a Refuted result for the same
/// problem is reported as an internal error.
pub fn run_check(p: &Problem, cfg: &RunConfig) -> Result<Outcome, PipelineError> {
    cfg.validate()?;
    let prep = prepare(p)?;
    run_prepared(&prep, cfg)
}

pub fn run_prepared(prep: &Prepared, cfg: &RunConfig) -> Result<Outcome, PipelineError> {
    let start = Instant::now();
    let cancel = Arc::new(AtomicBool::new(false));
    let solver = cfg.solver.clone().with_cancel(cancel.clone());
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        let (tp, tr) = (tx.clone(), tx);
        let (sp, sr) = (&solver, &solver);
        scope.spawn(move || {
            let _ = tp.send((Branch::Prover, prover_branch(prep, cfg, sp, start)));
        });
        scope.spawn(move || {
            let _ = tr.send((Branch::Refuter, refuter_branch(prep, cfg, sr, start)));
        });
        let mut prover = None;
        let mut refuter = None;
        for _ in 0..2 {
            let (b, r) = rx.recv().expect("branch result");
            let conclusive = matches!(r, Ok(Outcome::Valid(_)) | Ok(Outcome::Refuted { .. }) | Err(_));
            match b {
                Branch::Prover => prover = Some(r),
                Branch::Refuter => refuter = Some(r),
            }
            if conclusive {
                cancel.store(true, Ordering::Relaxed);
            }
        }
        resolve(prover.expect("prover result"), refuter.expect("refuter result"))
    })
}

fn resolve(
    prover: Result<Outcome, PipelineError>,
    refuter: Result<Outcome, PipelineError>,
) -> Result<Outcome, PipelineError> {
    // A branch cancelled by the winner may fail; only conflicts and errors
    // without a winner surface.
    let settle = |r: Result<Outcome, PipelineError>| match r {
        Err(e @ PipelineError::Conflict(_)) => Err(e),
        Err(e) => Ok(Err(e)),
        Ok(o) => Ok(Ok(o)),
    };
    match (settle(prover)?, settle(refuter)?) {
        (Ok(Outcome::Valid(_)), Ok(Outcome::Refuted { .. })) | (Ok(Outcome::Refuted { .. }), Ok(Outcome::Valid(_))) => {
            Err(PipelineError::Conflict("both a proof and a certified refutation were found".into()))
        }
        (Ok(v @ Outcome::Valid(_)), _) => Ok(v),
        (Ok(r @ Outcome::Refuted { .. }), _) | (_, Ok(r @ Outcome::Refuted { .. })) => Ok(r),
        (_, Ok(v @ Outcome::Valid(_))) => Ok(v),
        (Err(e), _) | (_, Err(e)) => Err(e),
        (Ok(Outcome::Unknown { diagnostics: mut a }), Ok(Outcome::Unknown { diagnostics: b })) => {
            a.extend(b);
            Ok(Outcome::Unknown { diagnostics: a })
        }
    }
}

/// Proving only.
pub fn run_prove(p: &Problem, cfg: &RunConfig) -> Result<Outcome, PipelineError> {
    cfg.validate()?;
    let prep = prepare(p)?;
    prover_branch(&prep, cfg, &cfg.solver, Instant::now())
}

/// Refuting only.
pub fn run_refute(p: &Problem, cfg: &RunConfig) -> Result<Outcome, PipelineError> {
    cfg.validate()?;
    let prep = prepare(p)?;
    refuter_branch(&prep, cfg, &cfg.solver, Instant::now())
}

#[derive(Debug, Clone)]
pub enum FoldUnfoldResult {
    /// One proof per split.
    Proved(Vec<crate::foldunfold::ProofObject>),
    Exhausted { split: usize, rounds: usize, last_size: usize, capped: bool },
}

pub fn run_fold_unfold(
    p: &Problem,
    budget: usize,
    cfg: &RunConfig,
    transcript_dir: Option<&Path>,
) -> Result<FoldUnfoldResult, PipelineError> {
    check_sid(&p.sid)?;
    let splits = normalize(p, DEFAULT_BLOWUP_LIMIT)?;
    let fs = p.vocab.shape.sorts();
    let sig = base_signature(&fs, &p.sid, &p.vocab.constants);
    let pc = ProveConfig {
        budget,
        cap: crate::foldunfold::DEFAULT_AXIOM_CAP,
        timeout_per_check: cfg.call_timeout.min(cfg.timeout),
        transcript_dir: transcript_dir.map(PathBuf::from),
    };
    let mut proofs = vec![];
    for (k, e) in splits.iter().enumerate() {
        match prove(e, &p.sid, &sig, &p.vocab.shape, &pc, &cfg.solver)? {
            ProveOutcome::Proved { proof, .. } => proofs.push(proof),
            ProveOutcome::Exhausted { rounds, last_size, capped } => {
                return Ok(FoldUnfoldResult::Exhausted { split: k, rounds, last_size, capped })
            }
        }
    }
    Ok(FoldUnfoldResult::Proved(proofs))
}

/// Certify a user-supplied symbolic structure against each split; the
/// first split it refutes is reported.
pub fn run_validate_model(p: &Problem, s: &SymbolicStructure, cfg: &RunConfig) -> Result<Result<(usize, Certificate), Vec<String>>, PipelineError> {
    let prep = prepare(p)?;
    let mut reasons = vec![];
    for (k, o) in prep.obligations.iter().enumerate() {
        let opts = certify_opts(&prep, k, &cfg.solver, cfg.call_timeout.min(cfg.timeout));
        match certify(CandidateModel::Symbolic(s.clone()), o, &opts) {
            Ok(c) => return Ok(Ok((k, c))),
            Err(RogueError::Symbolic(SymbolicError::Lia(e))) => return Err(SymbolicError::Lia(e).into()),
            Err(e) => reasons.push(format!("split {}: {e}", k + 1)),
        }
    }
    Ok(Err(reasons))
}

/// True when a certificate meets the gate for reporting a refutation.
pub fn certificate_ok(prep: &Prepared, c: &Certificate) -> bool {
    c.verdicts.iter().all(|v| v.holds)
        && (!prep.heap_reducing || !matches!(c.rogueness, Rogueness::NotLeast))
        && (!prep.heap_reducing || !matches!(c.model, CandidateModel::Symbolic(_)) || !c.infinite.is_empty())
}

/// Expected verdict in a benchmark manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Valid,
    Refuted,
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct BenchEntry {
    pub category: String,
    pub file: String,
    pub outcome: String,
    pub expected: Option<Expected>,
    pub elapsed_ms: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub category: String,
    pub examples: usize,
    pub valid: usize,
    pub counter_model: usize,
    pub timeout: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchReport {
    pub entries: Vec<BenchEntry>,
    pub rows: Vec<BenchRow>,
    /// Entries whose outcome contradicts the manifest.
    pub mismatches: Vec<String>,
}

impl BenchReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("category,examples,valid,counter_model,timeout,errors\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.category, r.examples, r.valid, r.counter_model, r.timeout, r.errors
            ));
        }
        out
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "{:<20} {:>10} {:>8} {:>15} {:>9} {:>7}\n",
            "category", "# examples", "# valid", "# counter-model", "# timeout", "# error"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<20} {:>10} {:>8} {:>15} {:>9} {:>7}\n",
                r.category, r.examples, r.valid, r.counter_model, r.timeout, r.errors
            ));
        }
        for m in &self.mismatches {
            out.push_str(&format!("mismatch: {m}\n"));
        }
        out
    }

    /// Share of entries with a Valid or Refuted outcome.
    pub fn resolved_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            return 1.0;
        }
        let n = self.entries.iter().filter(|e| e.outcome == "valid" || e.outcome == "refuted").count();
        n as f64 / self.entries.len() as f64
    }
}

fn problem_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "sl"))
        .collect();
    v.sort();
    Ok(v)
}

/// Run `check` on every `.sl` file of `dir`, grouped by subdirectory.
/// Files directly in `dir` form the category `.`. An optional
/// `manifest.json` maps relative paths to `valid` or `refuted`.
pub fn run_bench(dir: &Path, cfg: &RunConfig) -> Result<BenchReport, PipelineError> {
    cfg.validate()?;
    let io = |e: std::io::Error| PipelineError::Config(format!("{}: {e}", dir.display()));
    let manifest: std::collections::BTreeMap<String, Expected> = match std::fs::read_to_string(dir.join(MANIFEST)) {
        Ok(s) => serde_json::from_str(&s).map_err(|e| PipelineError::Config(format!("{MANIFEST}: {e}")))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Default::default(),
        Err(e) => return Err(io(e)),
    };
    let mut groups: Vec<(String, Vec<PathBuf>)> = vec![];
    let top = problem_files(dir).map_err(io)?;
    if !top.is_empty() {
        groups.push((".".into(), top));
    }
    let mut subdirs: Vec<PathBuf> =
        std::fs::read_dir(dir).map_err(io)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    for d in subdirs {
        let files = problem_files(&d).map_err(io)?;
        let name = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        groups.push((name, files));
    }
    let mut report = BenchReport::default();
    let mut seen = std::collections::BTreeSet::new();
    for (cat, files) in groups {
        let mut row = BenchRow { category: cat.clone(), ..Default::default() };
        for f in files {
            let rel = f.strip_prefix(dir).unwrap_or(&f).to_string_lossy().replace('\\', "/");
            seen.insert(rel.clone());
            let expected = manifest.get(&rel).copied();
            let start = Instant::now();
            let res = crate::frontend::parse_file(&f).map_err(|d| d.to_string()).and_then(|p| {
                let prep = prepare(&p).map_err(|e| e.to_string())?;
                let o = run_prepared(&prep, cfg).map_err(|e| e.to_string())?;
                let certified = match &o {
                    Outcome::Refuted { certificate, .. } => certificate_ok(&prep, certificate),
                    _ => true,
                };
                Ok((o, certified))
            });
            row.examples += 1;
            let (outcome, error) = match res {
                Ok((Outcome::Valid(_), _)) => {
                    row.valid += 1;
                    ("valid".to_string(), None)
                }
                Ok((Outcome::Refuted { .. }, certified)) => {
                    if certified {
                        row.counter_model += 1;
                        ("refuted".to_string(), None)
                    } else {
                        row.errors += 1;
                        report.mismatches.push(format!("{rel}: refutation without a passing certificate"));
                        ("error".to_string(), Some("uncertified refutation".to_string()))
                    }
                }
                Ok((Outcome::Unknown { .. }, _)) => {
                    row.timeout += 1;
                    ("unknown".to_string(), None)
                }
                Err(e) => {
                    row.errors += 1;
                    ("error".to_string(), Some(e))
                }
            };
            match (expected, outcome.as_str()) {
                (Some(Expected::Valid), "refuted") | (Some(Expected::Refuted), "valid") => {
                    report.mismatches.push(format!("{rel}: expected {:?}, got {outcome}", expected.unwrap()));
                }
                _ => {}
            }
            report.entries.push(BenchEntry {
                category: cat.clone(),
                file: rel,
                outcome,
                expected,
                elapsed_ms: start.elapsed().as_millis() as u64,
                error,
            });
        }
        report.rows.push(row);
    }
    for k in manifest.keys() {
        if !seen.contains(k) {
            report.mismatches.push(format!("{k}: listed in the manifest but not found"));
        }
    }
    Ok(report)
}
