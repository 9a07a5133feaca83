use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};
use wslcheck_core::pipeline::{
    run_bench, run_check, run_fold_unfold, run_prove, run_refute, run_validate_model, FoldUnfoldResult, Outcome,
    PipelineError, RunConfig,
};
use wslcheck_core::rogue::{certificate_json, render, Certificate, Format};
use wslcheck_core::solver::Solver;
use wslcheck_core::symbolic::{from_json, StructureJson, TemplateSpec};
use wslcheck_core::{parse_file, Problem};

const EXIT_VALID: u8 = 0;
const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_REFUTED: u8 = 10;
const EXIT_UNKNOWN: u8 = 20;

#[derive(Parser)]
#[command(name = "wslcheck", version, about = "Entailment checker for separation logic under weak semantics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Wall-clock limit per problem, in seconds.
    #[arg(long, global = true, default_value_t = 30.0)]
    timeout: f64,
    /// SMT solver binary (defaults to $WSLCHECK_SOLVER or `z3`).
    #[arg(long, global = true)]
    solver_path: Option<PathBuf>,
    /// Template shape `RAYS[:EXTRA[:CLAUSES]]`; repeat to try several in order.
    #[arg(long, global = true)]
    template: Vec<TemplateSpec>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Write every SMT-LIB script sent to the solver into this directory.
    #[arg(long, global = true)]
    emit_smt: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Race a proof against a counter-model search.
    Check {
        file: PathBuf,
        /// Write the counter-model as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Try to prove validity only.
    ProveWsl { file: PathBuf },
    /// Search for a certified counter-model only.
    Refute {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Fold/unfold proof search for theory-free quantifier-free problems.
    FoldUnfold {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        budget: usize,
    },
    /// Certify a symbolic structure (JSON) as a counter-model.
    ValidateModel { model: PathBuf, file: PathBuf },
    /// Run `check` over a directory of problems.
    Bench {
        dir: PathBuf,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn config(c: &Common) -> Result<RunConfig> {
    if !(c.timeout.is_finite() && c.timeout > 0.0) {
        anyhow::bail!("--timeout must be positive");
    }
    let mut solver = match &c.solver_path {
        Some(p) => Solver::new(p),
        None => Solver::from_env(),
    };
    solver.emit_dir = c.emit_smt.clone();
    let t = Duration::from_secs_f64(c.timeout);
    Ok(RunConfig {
        timeout: t,
        call_timeout: t,
        templates: if c.template.is_empty() { TemplateSpec::default_family() } else { c.template.clone() },
        solver,
    })
}

fn load(file: &Path) -> Result<Problem, u8> {
    parse_file(file).map_err(|d| {
        eprintln!("{d}");
        EXIT_USAGE
    })
}

fn pipeline_exit(file: &Path, e: PipelineError) -> u8 {
    eprintln!("{}: {e}", file.display());
    EXIT_USAGE
}

fn write_dot(path: &Option<PathBuf>, c: &Certificate) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, render(c, Format::Dot)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn report(file: &Path, o: &Outcome, elapsed: Duration, json_out: bool, dot: &Option<PathBuf>) -> Result<u8> {
    let code = match o {
        Outcome::Valid(_) => EXIT_VALID,
        Outcome::Refuted { .. } => EXIT_REFUTED,
        Outcome::Unknown { .. } => EXIT_UNKNOWN,
    };
    if let Outcome::Refuted { certificate, .. } = o {
        write_dot(dot, certificate)?;
    }
    if json_out {
        let mut v = json!({
            "file": file.display().to_string(),
            "outcome": o.label(),
            "elapsed_ms": elapsed.as_millis() as u64,
        });
        match o {
            Outcome::Valid(ev) => v["evidence"] = json!(ev),
            Outcome::Refuted { split, certificate } => {
                v["split"] = json!(split);
                v["certificate"] = certificate_json(certificate);
            }
            Outcome::Unknown { diagnostics } => v["diagnostics"] = json!(diagnostics),
        }
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("{}: {} ({:.2}s)", file.display(), o.label(), elapsed.as_secs_f64());
        match o {
            Outcome::Refuted { certificate, .. } => print!("{}", render(certificate, Format::Text)),
            Outcome::Unknown { diagnostics } => diagnostics.iter().for_each(|d| println!("  {d}")),
            Outcome::Valid(_) => {}
        }
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = match config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_USAGE);
        }
    };
    let json_out = cli.common.json;
    match cli.cmd {
        Cmd::Check { file, dot } => {
            let p = match load(&file) {
                Ok(p) => p,
                Err(c) => return Ok(c),
            };
            let start = Instant::now();
            match run_check(&p, &cfg) {
                Ok(o) => report(&file, &o, start.elapsed(), json_out, &dot),
                Err(e) => Ok(pipeline_exit(&file, e)),
            }
        }
        Cmd::ProveWsl { file } => {
            let p = match load(&file) {
                Ok(p) => p,
                Err(c) => return Ok(c),
            };
            let start = Instant::now();
            match run_prove(&p, &cfg) {
                Ok(o) => report(&file, &o, start.elapsed(), json_out, &None),
                Err(e) => Ok(pipeline_exit(&file, e)),
            }
        }
        Cmd::Refute { file, dot } => {
            let p = match load(&file) {
                Ok(p) => p,
                Err(c) => return Ok(c),
            };
            let start = Instant::now();
            match run_refute(&p, &cfg) {
                Ok(o) => report(&file, &o, start.elapsed(), json_out, &dot),
                Err(e) => Ok(pipeline_exit(&file, e)),
            }
        }
        Cmd::FoldUnfold { file, budget } => {
            let p = match load(&file) {
                Ok(p) => p,
                Err(c) => return Ok(c),
            };
            let start = Instant::now();
            let r = match run_fold_unfold(&p, budget, &cfg, cli.common.emit_smt.as_deref()) {
                Ok(r) => r,
                Err(e) => return Ok(pipeline_exit(&file, e)),
            };
            let elapsed = start.elapsed().as_secs_f64();
            match r {
                FoldUnfoldResult::Proved(proofs) => {
                    if json_out {
                        println!("{}", serde_json::to_string_pretty(&json!({ "outcome": "proved", "proofs": proofs }))?);
                    } else {
                        println!("{}: proved ({elapsed:.2}s)", file.display());
                        for (k, pr) in proofs.iter().enumerate() {
                            println!("  split {}: round {}, {} axiom(s)", k + 1, pr.round, pr.axioms.len());
                            for a in &pr.axioms {
                                println!("    {}", a.formula);
                            }
                        }
                    }
                    Ok(EXIT_VALID)
                }
                FoldUnfoldResult::Exhausted { split, rounds, last_size, capped } => {
                    if json_out {
                        let v = json!({ "outcome": "exhausted", "split": split, "rounds": rounds,
                                        "last_size": last_size, "capped": capped });
                        println!("{}", serde_json::to_string_pretty(&v)?);
                    } else {
                        let cap = if capped { ", stopped by the axiom cap" } else { "" };
                        println!(
                            "{}: exhausted on split {} after {rounds} round(s), last set {last_size} axioms{cap}",
                            file.display(),
                            split + 1
                        );
                    }
                    Ok(EXIT_UNKNOWN)
                }
            }
        }
        Cmd::ValidateModel { model, file } => {
            let p = match load(&file) {
                Ok(p) => p,
                Err(c) => return Ok(c),
            };
            let text = std::fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let sj: StructureJson = match serde_json::from_str(&text) {
                Ok(j) => j,
                Err(e) => {
                    eprintln!("{}: {e}", model.display());
                    return Ok(EXIT_USAGE);
                }
            };
            let s = match from_json(&sj) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: {e}", model.display());
                    return Ok(EXIT_USAGE);
                }
            };
            match run_validate_model(&p, &s, &cfg) {
                Ok(Ok((_, c))) => {
                    if json_out {
                        println!("{}", serde_json::to_string_pretty(&certificate_json(&c))?);
                    } else {
                        print!("{}", render(&c, Format::Text));
                    }
                    Ok(EXIT_VALID)
                }
                Ok(Err(reasons)) => {
                    println!("{}: model rejected", model.display());
                    reasons.iter().for_each(|r| println!("  {r}"));
                    Ok(EXIT_MISMATCH)
                }
                Err(e) => Ok(pipeline_exit(&file, e)),
            }
        }
        Cmd::Bench { dir, csv } => {
            let r = match run_bench(&dir, &cfg) {
                Ok(r) => r,
                Err(e) => return Ok(pipeline_exit(&dir, e)),
            };
            if let Some(p) = csv {
                std::fs::write(&p, r.csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            if json_out {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                for e in &r.entries {
                    let err = e.error.as_deref().map(|x| format!(" ({x})")).unwrap_or_default();
                    println!("{:<40} {:<8} {:>7} ms{err}", e.file, e.outcome, e.elapsed_ms);
                }
                print!("{}", r.text());
            }
            Ok(if r.mismatches.is_empty() { EXIT_VALID } else { EXIT_MISMATCH })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
