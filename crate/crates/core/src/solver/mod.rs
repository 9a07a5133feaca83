//! Driving an external SMT solver (Z3) over SMT-LIB 2 text.

mod model;
pub mod smtlib;

pub use model::{extract_finite_model, ModelError};
pub use smtlib::{emit_smtlib, EmitOptions};

use crate::encode::Obligation;
use crate::semantics::FoStructure;
use crate::sexp::{parse_all, Sexp};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;

pub const SOLVER_ENV: &str = "WSLCHECK_SOLVER";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver `{path}`: {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("solver i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected solver output: {0}")]
    Protocol(String),
    #[error("solver error: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    Cancelled,
    Incomplete(String),
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownReason::Timeout => write!(f, "timeout"),
            UnknownReason::Cancelled => write!(f, "cancelled"),
            UnknownReason::Incomplete(r) => write!(f, "incomplete: {r}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolverVerdict {
    /// `model` is present when a finite model could be read back.
    Sat { model: Option<FoStructure>, raw_model: Option<String> },
    /// `core` lists assertion indices when cores were requested.
    Unsat { core: Option<Vec<usize>> },
    Unknown(UnknownReason),
}

impl SolverVerdict {
    pub fn is_unsat(&self) -> bool {
        matches!(self, SolverVerdict::Unsat { .. })
    }
    pub fn is_sat(&self) -> bool {
        matches!(self, SolverVerdict::Sat { .. })
    }
}

/// Raw result of running one script.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub stdout: String,
    pub timed_out: bool,
    pub cancelled: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct Solver {
    pub path: PathBuf,
    pub cancel: Option<Arc<AtomicBool>>,
    /// Directory where every script sent to the solver is written.
    pub emit_dir: Option<PathBuf>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::from_env()
    }
}

static SCRIPT_COUNTER: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

impl Solver {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Solver { path: path.into(), cancel: None, emit_dir: None }
    }

    /// `$WSLCHECK_SOLVER` or `z3` on the path.
    pub fn from_env() -> Self {
        Solver::new(std::env::var(SOLVER_ENV).unwrap_or_else(|_| "z3".to_string()))
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn is_available(&self) -> bool {
        Command::new(&self.path)
            .arg("-version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map(|s| s.success())
            .unwrap_or(false)
    }

    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn record(&self, script: &str, tag: &str) {
        if let Some(dir) = &self.emit_dir {
            let n = SCRIPT_COUNTER.fetch_add(1, Ordering::Relaxed);
            let _ = std::fs::create_dir_all(dir);
            let _ = std::fs::write(dir.join(format!("{n:04}_{tag}.smt2")), script);
        }
    }

    /// Run a script, killing the process after `timeout` (plus a short grace
    /// period for the solver's own timeout to fire) or on cancellation.
    pub fn run_script(&self, script: &str, timeout: Duration, tag: &str) -> Result<RunOutput, SolverError> {
        self.record(script, tag);
        let start = Instant::now();
        if timeout.is_zero() || self.cancelled() {
            return Ok(RunOutput {
                stdout: String::new(),
                timed_out: timeout.is_zero(),
                cancelled: self.cancelled(),
                elapsed: Duration::ZERO,
            });
        }
        let mut child = Command::new(&self.path)
            .args(["-in", "-smt2"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SolverError::Spawn { path: self.path.display().to_string(), source: e })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let text = script.to_string();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let deadline = timeout + Duration::from_millis(500).max(timeout / 10);
        let mut timed_out = false;
        let mut cancelled = false;
        loop {
            if child.try_wait()?.is_some() {
                break;
            }
            if start.elapsed() > deadline {
                timed_out = true;
                let _ = child.kill();
                let _ = child.wait();
                break;
            }
            if self.cancelled() {
                cancelled = true;
                let _ = child.kill();
                let _ = child.wait();
                break;
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        let _ = writer.join();
        let stdout = reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();
        if !timed_out && !cancelled && stdout.trim().is_empty() && !stderr.trim().is_empty() {
            return Err(SolverError::Solver(stderr.trim().to_string()));
        }
        Ok(RunOutput { stdout, timed_out, cancelled, elapsed: start.elapsed() })
    }

    /// Check satisfiability of an obligation. With `named`, an unsat answer
    /// carries the indices of an unsat core.
    pub fn check(&self, o: &Obligation, timeout: Duration, named: bool) -> Result<SolverVerdict, SolverError> {
        let models = true;
        let opts = EmitOptions { named, models, timeout_ms: Some(timeout.as_millis().max(1) as u64) };
        let script = emit_smtlib(o, &opts);
        let out = self.run_script(&script, timeout, "check")?;
        if out.cancelled {
            return Ok(SolverVerdict::Unknown(UnknownReason::Cancelled));
        }
        let items = parse_all(&out.stdout).map_err(|e| SolverError::Protocol(e.to_string()))?;
        let Some(first) = items.first() else {
            return Ok(SolverVerdict::Unknown(if out.timed_out {
                UnknownReason::Timeout
            } else {
                UnknownReason::Incomplete("no output".into())
            }));
        };
        match first.atom() {
            Some("unsat") => {
                let core = if named {
                    let core = items.iter().skip(1).find_map(|s| core_indices(s));
                    Some(core.ok_or_else(|| SolverError::Protocol("missing unsat core".into()))?)
                } else {
                    None
                };
                Ok(SolverVerdict::Unsat { core })
            }
            Some("sat") => {
                let model_sexp = items.iter().skip(1).find(|s| is_model(s));
                let model = match model_sexp {
                    Some(m) => extract_finite_model(m, &o.signature).ok(),
                    None => None,
                };
                Ok(SolverVerdict::Sat { model, raw_model: model_sexp.map(|m| m.to_string()) })
            }
            Some("unknown") => {
                let reason = items
                    .iter()
                    .skip(1)
                    .find_map(|s| {
                        let l = s.list()?;
                        if l.first()?.atom()? == ":reason-unknown" {
                            match l.get(1)? {
                                Sexp::Str(r) | Sexp::Atom(r) => Some(r.clone()),
                                _ => None,
                            }
                        } else {
                            None
                        }
                    })
                    .unwrap_or_default();
                if out.timed_out || reason.contains("timeout") || reason.contains("canceled") {
                    Ok(SolverVerdict::Unknown(UnknownReason::Timeout))
                } else {
                    Ok(SolverVerdict::Unknown(UnknownReason::Incomplete(reason)))
                }
            }
            _ => {
                if let Some("error") = first.head() {
                    return Err(SolverError::Solver(first.to_string()));
                }
                Err(SolverError::Protocol(first.to_string()))
            }
        }
    }
}

fn is_model(s: &Sexp) -> bool {
    match s.list() {
        Some(v) if v.is_empty() => true,
        Some(v) => v[0].atom() == Some("model") || v.iter().all(|x| x.list().is_some()),
        None => false,
    }
}

fn core_indices(s: &Sexp) -> Option<Vec<usize>> {
    let v = s.list()?;
    let mut out = vec![];
    for x in v {
        let a = x.atom()?;
        out.push(a.strip_prefix('A')?.parse().ok()?);
    }
    out.sort_unstable();
    Some(out)
}
