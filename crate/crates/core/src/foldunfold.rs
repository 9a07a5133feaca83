//! Fold/unfold proofs for theory-free quantifier-free entailments: a fair
//! breadth-first enumeration of finite axiom sets, each checked by the FO
//! encoding with the definitions replaced by the axioms.

use crate::encode::fo::{xstar, Fo, Rel};
use crate::encode::{encode_entailment, same_heaplet, Assertion, EncodeError, Encoder, Role, Signature};
use crate::normalize::NormalizedEntailment;
use crate::sl::{Formula, PredDef, RecordShape, Sid, Sort, Symbol, Term, NIL};
use crate::solver::{emit_smtlib, EmitOptions, Solver, SolverError, SolverVerdict};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Default limit on the number of axioms in one set.
pub const DEFAULT_AXIOM_CAP: usize = 2000;

#[derive(Debug, Error)]
pub enum FoldUnfoldError {
    #[error("fold/unfold proofs need a theory-free entailment and SID")]
    NotTheoryFree,
    #[error("the antecedent is not quantifier-free")]
    NotQuantifierFree,
    #[error("unknown predicate `{0}`")]
    UnknownPred(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxiomKind {
    Fold,
    Unfold,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldUnfoldAxiom {
    pub kind: AxiomKind,
    pub pred: String,
    pub args: Vec<Term>,
    /// Witness terms for a fold, fresh constants for an unfold.
    pub witnesses: Vec<Term>,
    pub sl: Formula,
    pub fo: Fo,
}

impl FoldUnfoldAxiom {
    pub fn render(&self, shape: &RecordShape) -> String {
        self.sl.pretty(shape).to_string()
    }

    pub fn label(&self) -> String {
        let args = self.args.iter().map(|t| t.to_string()).join(", ");
        let ws = self.witnesses.iter().map(|t| t.to_string()).join(", ");
        let k = match self.kind {
            AxiomKind::Fold => "fold",
            AxiomKind::Unfold => "unfold",
        };
        format!("{k} {}({args}) [{ws}]", self.pred)
    }
}

fn pred_pair(p: &str, args: &[Term]) -> (Fo, Fo) {
    let mut eta_args = args.to_vec();
    eta_args.push(Term::Var(xstar()));
    (Fo::rel(Rel::fo(p), args.to_vec()), Fo::rel(Rel::eta(p), eta_args))
}

/// `/\_j (rho_j[t, t'] -> P(t))` and its encoding.
pub fn fold_axiom(def: &PredDef, args: &[Term], witnesses: &[Term]) -> Result<FoldUnfoldAxiom, EncodeError> {
    let mut enc = Encoder::new();
    let (p_fo, p_eta) = pred_pair(&def.name, args);
    let head = Formula::pred(&def.name, args.to_vec());
    let mut sl = vec![];
    let mut fo = vec![];
    for j in 0..def.cases.len() {
        let rho = def.instantiate(j, args, witnesses);
        let (r_fo, r_eta) = enc.encode_uc(&rho)?;
        fo.push(Fo::implies(r_fo, Fo::and(vec![p_fo.clone(), same_heaplet(&p_eta, &r_eta)])));
        sl.push(Formula::implies(rho, head.clone()));
    }
    Ok(FoldUnfoldAxiom {
        kind: AxiomKind::Fold,
        pred: def.name.clone(),
        args: args.to_vec(),
        witnesses: witnesses.to_vec(),
        sl: Formula::and(sl),
        fo: Fo::and(fo),
    })
}

/// `P(t) -> \/_j rho_j[t, c]` and its encoding.
pub fn unfold_axiom(def: &PredDef, args: &[Term], fresh: &[Term]) -> Result<FoldUnfoldAxiom, EncodeError> {
    let mut enc = Encoder::new();
    let (p_fo, p_eta) = pred_pair(&def.name, args);
    let mut cases = vec![];
    let mut fo = vec![];
    for j in 0..def.cases.len() {
        let rho = def.instantiate(j, args, fresh);
        let (r_fo, r_eta) = enc.encode_uc(&rho)?;
        fo.push(Fo::and(vec![r_fo, same_heaplet(&p_eta, &r_eta)]));
        cases.push(rho);
    }
    Ok(FoldUnfoldAxiom {
        kind: AxiomKind::Unfold,
        pred: def.name.clone(),
        args: args.to_vec(),
        witnesses: fresh.to_vec(),
        sl: Formula::implies(Formula::pred(&def.name, args.to_vec()), Formula::or(cases)),
        fo: Fo::implies(p_fo, Fo::or(fo)),
    })
}

/// Cumulative axiom sets: `U_i` is `axioms[..ends[i]]`.
#[derive(Debug, Clone, Default)]
pub struct AxiomEnumeration {
    pub axioms: Vec<FoldUnfoldAxiom>,
    pub ends: Vec<usize>,
    /// The cap stopped the enumeration before the budget.
    pub capped: bool,
}

impl AxiomEnumeration {
    pub fn set(&self, i: usize) -> &[FoldUnfoldAxiom] {
        &self.axioms[..self.ends[i]]
    }
    pub fn rounds(&self) -> usize {
        self.ends.len()
    }
}

fn is_theory_free(f: &Formula) -> bool {
    let mut ok = true;
    f.for_each_term(&mut |t| {
        if t.sort() == Sort::Int || t.has_field() {
            ok = false;
        }
    });
    ok && !f.any(&|g| matches!(g, Formula::Lt(..) | Formula::NotLt(..)))
}

fn is_qf(f: &Formula) -> bool {
    !f.any(&|g| matches!(g, Formula::Exists(..) | Formula::Forall(..)))
}

/// Breadth-first enumeration. Round 0 terms are the constants of `e` and
/// `nil`; each round adds, for every predicate and every tuple of current
/// terms, one unfold axiom with fresh constants and the fold axioms with
/// every tuple of current witness terms. Fresh constants join the term
/// universe for the next round. Stops after `budget` rounds or before a set
/// would exceed `cap` axioms.
pub fn enumerate_axioms(
    sid: &Sid,
    e: &NormalizedEntailment,
    budget: usize,
    cap: usize,
) -> Result<AxiomEnumeration, FoldUnfoldError> {
    let all: Vec<&Formula> = std::iter::once(&e.antecedent).chain(e.disjuncts.iter()).collect();
    if !all.iter().all(|f| is_theory_free(f)) || !sid.iter().all(|d| d.cases.iter().all(is_theory_free)) {
        return Err(FoldUnfoldError::NotTheoryFree);
    }
    if !is_qf(&e.antecedent) {
        return Err(FoldUnfoldError::NotQuantifierFree);
    }
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut terms: Vec<Term> = vec![Term::nil()];
    used.insert(NIL.to_string());
    for f in &all {
        for c in f.constants() {
            if used.insert(c.name.clone()) {
                terms.push(Term::Const(c));
            }
        }
    }
    for s in &e.skolems {
        if used.insert(s.name.clone()) {
            terms.push(Term::Const(s.clone()));
        }
    }
    for d in sid.iter() {
        for c in d.cases.iter().flat_map(|c| c.constants()) {
            if used.insert(c.name.clone()) {
                terms.push(Term::Const(c));
            }
        }
    }
    let mut next_fresh = 0usize;
    let mut fresh = |used: &mut BTreeSet<String>| -> Term {
        loop {
            let name = format!("c{next_fresh}");
            next_fresh += 1;
            if used.insert(name.clone()) {
                return Term::Const(Symbol::loc(name));
            }
        }
    };
    let mut out = AxiomEnumeration::default();
    let mut unfolded: BTreeSet<(String, Vec<Term>)> = BTreeSet::new();
    let mut folded: BTreeSet<(String, Vec<Term>, Vec<Term>)> = BTreeSet::new();
    for _ in 0..budget {
        let universe = terms.clone();
        let mut round = vec![];
        for d in sid.iter() {
            let tuples: Vec<Vec<Term>> = if d.params.is_empty() {
                vec![vec![]]
            } else {
                (0..d.params.len()).map(|_| universe.iter().cloned()).multi_cartesian_product().collect()
            };
            for t in tuples {
                if unfolded.insert((d.name.clone(), t.clone())) {
                    let cs: Vec<Term> = d.exists.iter().map(|_| fresh(&mut used)).collect();
                    round.push(unfold_axiom(d, &t, &cs)?);
                    terms.extend(cs);
                }
                let wits: Vec<Vec<Term>> = if d.exists.is_empty() {
                    vec![vec![]]
                } else {
                    (0..d.exists.len()).map(|_| universe.iter().cloned()).multi_cartesian_product().collect()
                };
                for w in wits {
                    if folded.insert((d.name.clone(), t.clone(), w.clone())) {
                        round.push(fold_axiom(d, &t, &w)?);
                    }
                }
                if out.axioms.len() + round.len() > cap {
                    out.capped = true;
                    return Ok(out);
                }
            }
        }
        out.axioms.extend(round);
        out.ends.push(out.axioms.len());
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomJson {
    pub kind: AxiomKind,
    pub pred: String,
    pub args: Vec<String>,
    pub witnesses: Vec<String>,
    pub formula: String,
}

/// Evidence that `U ∪ {phi} |- psi` holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofObject {
    /// 1-based enumeration round whose set was first found valid.
    pub round: usize,
    /// Size of that round's cumulative set.
    pub round_size: usize,
    /// The axioms of an unsat core, re-checked on their own.
    pub axioms: Vec<AxiomJson>,
    pub solver_verdict: String,
    pub elapsed_ms: u64,
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum ProveOutcome {
    Proved { proof: ProofObject, axioms: Vec<FoldUnfoldAxiom> },
    /// No set up to the budget was found valid.
    Exhausted { rounds: usize, last_size: usize, capped: bool },
}

fn assertions(axioms: &[FoldUnfoldAxiom], shape: &RecordShape) -> Vec<Assertion> {
    axioms
        .iter()
        .map(|a| Assertion { role: Role::Axiom, name: a.render(shape), sentence: a.fo.clone() })
        .collect()
}

fn axiom_json(a: &FoldUnfoldAxiom, shape: &RecordShape) -> AxiomJson {
    AxiomJson {
        kind: a.kind,
        pred: a.pred.clone(),
        args: a.args.iter().map(|t| t.to_string()).collect(),
        witnesses: a.witnesses.iter().map(|t| t.to_string()).collect(),
        formula: a.render(shape),
    }
}

pub struct ProveConfig {
    pub budget: usize,
    pub cap: usize,
    pub timeout_per_check: Duration,
    /// Where to write the SMT-LIB script of the final check.
    pub transcript_dir: Option<PathBuf>,
}

/// Check `U_i ∪ {phi} |- psi` for `i = 1..budget` and return the first
/// valid set, minimised to an unsat core.
pub fn prove(
    e: &NormalizedEntailment,
    sid: &Sid,
    signature: &Signature,
    shape: &RecordShape,
    cfg: &ProveConfig,
    solver: &Solver,
) -> Result<ProveOutcome, FoldUnfoldError> {
    let en = enumerate_axioms(sid, e, cfg.budget, cfg.cap)?;
    for i in 0..en.rounds() {
        let set = en.set(i);
        let o = encode_entailment(e, sid, signature, Some(assertions(set, shape)))?;
        let start = Instant::now();
        let v = solver.check(&o, cfg.timeout_per_check, true)?;
        let SolverVerdict::Unsat { core } = v else { continue };
        let core: BTreeSet<usize> = core.unwrap_or_default().into_iter().collect();
        let used: Vec<FoldUnfoldAxiom> =
            set.iter().enumerate().filter(|(k, _)| core.contains(k)).map(|(_, a)| a.clone()).collect();
        // Replay the core on its own; fall back to the whole set.
        let mut chosen = set.to_vec();
        let replay = encode_entailment(e, sid, signature, Some(assertions(&used, shape)))?;
        let mut final_o = o;
        if solver.check(&replay, cfg.timeout_per_check, false)?.is_unsat() {
            chosen = used;
            final_o = replay;
        }
        let transcript = match &cfg.transcript_dir {
            Some(dir) => {
                let path = dir.join("fold_unfold_proof.smt2");
                std::fs::create_dir_all(dir).map_err(SolverError::Io)?;
                std::fs::write(&path, emit_smtlib(&final_o, &EmitOptions::default())).map_err(SolverError::Io)?;
                Some(path)
            }
            None => None,
        };
        let proof = ProofObject {
            round: i + 1,
            round_size: set.len(),
            axioms: chosen.iter().map(|a| axiom_json(a, shape)).collect(),
            solver_verdict: "unsat".into(),
            elapsed_ms: start.elapsed().as_millis() as u64,
            transcript,
        };
        return Ok(ProveOutcome::Proved { proof, axioms: chosen });
    }
    Ok(ProveOutcome::Exhausted {
        rounds: en.rounds(),
        last_size: en.ends.last().copied().unwrap_or(0),
        capped: en.capped,
    })
}
