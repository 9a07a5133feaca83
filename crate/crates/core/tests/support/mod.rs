//! Shared helpers for the integration suites: fixture paths, random
//! formula generation and the exhaustive correspondence and agreement
//! checks. Also pulled into the CLI acceptance target by path.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;
use wslcheck_core::encode::{base_signature, encode_entailment, Assertion, Encoder, Role};
use wslcheck_core::foldunfold::{enumerate_axioms, FoldUnfoldAxiom};
use wslcheck_core::normalize::NormalizedEntailment;
use wslcheck_core::semantics::{
    all_heaps, all_tuples, all_valuations, decide_qf_entailment, denote_heaplet, determined_interpretations, eval_fo,
    is_determined_heap, is_fixpoint, lfp_interpret, satisfies, FoStructure, HeapStructure, Heaplet, IntSlice,
    OracleOptions, OracleVerdict, QfEntailment, SemanticsError,
};
use wslcheck_core::solver::{Solver, SolverVerdict};
use wslcheck_core::{parse_file, parse_problem, Formula, Problem, Sid, Sort, Symbol, Term};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(rel: &str) -> PathBuf {
    root().join("fixtures").join(rel)
}

pub fn load(rel: &str) -> Problem {
    parse_file(&fixture(rel)).unwrap_or_else(|d| panic!("{d}"))
}

pub fn solver() -> Solver {
    Solver::from_env()
}

pub const LSEG: &str = "data node { node next; };
pred lseg(x, y) := x = y \\/ x != y * exists u. x->node{u} * lseg(u, y);
checkentail emp |- emp;";

/// The list-segment SID over a single `next` field.
pub fn lseg_problem() -> Problem {
    parse_problem(LSEG, "lseg.sl").expect("lseg parses")
}

pub const CONSTS: [&str; 3] = ["a", "b", "c"];

fn term(rng: &mut StdRng, with_nil: bool, open: bool) -> Term {
    let k = rng.gen_range(0..CONSTS.len() + usize::from(with_nil));
    if k == CONSTS.len() {
        Term::nil()
    } else if open {
        Term::var(CONSTS[k], Sort::Loc)
    } else {
        Term::cnst(CONSTS[k], Sort::Loc)
    }
}

fn atom(rng: &mut StdRng, preds: bool, open: bool) -> Formula {
    let kinds = if preds { 5 } else { 4 };
    let t = |rng: &mut StdRng, nil| term(rng, nil, open);
    match rng.gen_range(0..kinds) {
        0 => Formula::Eq(t(rng, true), t(rng, true)),
        1 => Formula::Neq(t(rng, true), t(rng, true)),
        2 => Formula::Emp,
        3 => Formula::pto(t(rng, false), vec![t(rng, true)]),
        _ => Formula::pred("lseg", vec![t(rng, true), t(rng, true)]),
    }
}

fn gen(rng: &mut StdRng, depth: u32, width: usize, preds: bool, open: bool) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return atom(rng, preds, open);
    }
    let n = rng.gen_range(2..=width);
    let parts: Vec<Formula> = (0..n).map(|_| gen(rng, depth - 1, width, preds, open)).collect();
    let f = if rng.gen_bool(0.7) { Formula::sep(parts) } else { Formula::and(parts) };
    if open && rng.gen_bool(0.3) {
        let v = Symbol::loc(CONSTS[rng.gen_range(0..CONSTS.len())]);
        if rng.gen_bool(0.5) {
            Formula::exists(vec![v], f)
        } else {
            Formula::forall(vec![v], f)
        }
    } else {
        f
    }
}

/// A random theory-free quantifier-free conjunctive formula over `a, b, c,
/// nil`, the `next` field and (when `preds`) `lseg`.
pub fn gen_formula(rng: &mut StdRng, depth: u32, preds: bool) -> Formula {
    gen(rng, depth, 3, preds, false)
}

/// As [`gen_formula`] with at most `width` children per connective.
pub fn gen_formula_sized(rng: &mut StdRng, depth: u32, width: usize, preds: bool) -> Formula {
    gen(rng, depth, width, preds, false)
}

/// Like [`gen_formula`] but over variables `a, b, c`, with some
/// subformulas quantified.
pub fn gen_open_formula(rng: &mut StdRng, depth: u32) -> Formula {
    gen(rng, depth, 3, true, true)
}

/// Heap structures over one `next` field with at most `max_nonnull`
/// non-null locations, with the least fixpoint of `sid` installed and no
/// constants assigned yet.
pub fn lfp_structures(sid: &Sid, max_nonnull: u32) -> Vec<HeapStructure> {
    let mut out = vec![];
    for n in 1..=max_nonnull {
        for heap in all_heaps(n + 1, &[Sort::Loc], &[]) {
            let base = HeapStructure {
                num_locs: n + 1,
                ints: IntSlice::default(),
                field_sorts: vec![Sort::Loc],
                heap,
                constants: BTreeMap::new(),
                preds: BTreeMap::new(),
            };
            out.push(lfp_interpret(&base, sid).expect("lfp").0);
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct ClaimStats {
    pub structures: u64,
    pub skipped_undetermined: u64,
    pub violations: Vec<String>,
}

/// Exhaustively check, for `f` over every structure and valuation:
/// `M, v, eta |= f` implies `eta = [[f]]`, and
/// `M, v, [[f]] |= f` iff `M_fo, v |= f_fo`.
pub fn check_formula_claims(f: &Formula, structures: &[HeapStructure], stats: &mut ClaimStats) {
    let (fo, eta) = Encoder::new().encode_uc(f).expect("encodes");
    let syms: Vec<Symbol> = f.constants().into_iter().filter(|s| s.name != "nil").collect();
    for m0 in structures {
        if !is_determined_heap(m0) {
            stats.skipped_undetermined += 1;
            continue;
        }
        for consts in all_valuations(m0.num_locs, &syms, &[]) {
            stats.structures += 1;
            let m = HeapStructure { constants: consts, ..m0.clone() };
            let mfo = FoStructure::from_heap(&m);
            let den = denote_heaplet(&mfo, &vec![], &eta).expect("denotation");
            let fo_val = eval_fo(&mfo, &vec![], &fo).expect("eval_fo");
            let den_heaplet = (!den.contains(&0)).then(|| Heaplet::from_locs(den.iter().copied()));
            for h in Heaplet::all(m.num_locs) {
                if satisfies(&m, &mut vec![], h, f).expect("satisfies") && den_heaplet != Some(h) {
                    stats.violations.push(format!("{f}: satisfied at {h:?} but [[f]] = {den:?} in {m:?}"));
                }
            }
            let sl_val = match den_heaplet {
                Some(h) => satisfies(&m, &mut vec![], h, f).expect("satisfies"),
                None => false,
            };
            if sl_val != fo_val {
                stats.violations.push(format!("{f}: SL at [[f]] = {sl_val}, FO = {fo_val} in {m:?}"));
            }
        }
    }
}

/// `M in FP(sid)` iff `M_fo |= sid_fo`, over every determined-heap
/// interpretation of a single-predicate SID on carriers with at most
/// `max_nonnull` non-null locations.
pub fn check_sid_claim(sid: &Sid, max_nonnull: u32, stats: &mut ClaimStats) {
    assert_eq!(sid.iter().count(), 1, "single-predicate SIDs only");
    let def = sid.iter().next().unwrap();
    let sid_fo = Encoder::new().encode_sid(sid).expect("encodes");
    let sorts: Vec<Sort> = def.params.iter().map(|p| p.sort).collect();
    for n in 1..=max_nonnull {
        let tuples = all_tuples(n + 1, &sorts, &[]);
        for heap in all_heaps(n + 1, &[Sort::Loc], &[]) {
            for interp in determined_interpretations(&tuples, n + 1) {
                stats.structures += 1;
                let m = HeapStructure {
                    num_locs: n + 1,
                    ints: IntSlice::default(),
                    field_sorts: vec![Sort::Loc],
                    heap: heap.clone(),
                    constants: BTreeMap::new(),
                    preds: [(def.name.clone(), interp)].into_iter().collect(),
                };
                let fp = is_fixpoint(&m, sid).expect("is_fixpoint");
                let fo = eval_fo(&FoStructure::from_heap(&m), &vec![], &sid_fo).expect("eval_fo");
                if fp != fo {
                    stats.violations.push(format!("fixpoint {fp} but FO {fo} in {m:?}"));
                }
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct Agreement {
    pub instances: u64,
    pub with_axioms: u64,
    pub oracle_valid: u64,
    /// Solver answered unknown.
    pub excluded: u64,
    /// Oracle enumeration budget exhausted.
    pub oracle_budget: u64,
    pub contradictions: Vec<String>,
}

impl Agreement {
    pub fn exclusion_rate(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            (self.excluded + self.oracle_budget) as f64 / self.instances as f64
        }
    }
}

/// A random entailment `phi |- psi`, optionally with up to three fold or
/// unfold axioms drawn from the first enumeration round.
pub fn gen_entailment(rng: &mut StdRng, sid: &Sid, with_axioms: bool) -> (NormalizedEntailment, Vec<FoldUnfoldAxiom>) {
    let antecedent = gen_formula_sized(rng, 2, 2, true);
    // A third of the consequents restate the antecedent with its separating
    // conjuncts reversed, so valid instances are not rare.
    let consequent = match &antecedent {
        Formula::Sep(v) if rng.gen_bool(0.33) => Formula::sep(v.iter().rev().cloned().collect()),
        _ => gen_formula_sized(rng, 2, 2, true),
    };
    let e = NormalizedEntailment { antecedent, exists: vec![], disjuncts: vec![consequent], skolems: vec![] };
    let mut axioms = vec![];
    if with_axioms {
        let en = enumerate_axioms(sid, &e, 1, 2000).expect("axioms");
        let pool = en.set(0);
        if !pool.is_empty() {
            for _ in 0..rng.gen_range(1..=3) {
                axioms.push(pool[rng.gen_range(0..pool.len())].clone());
            }
        }
    }
    (e, axioms)
}

/// Compare the bounded oracle with the encoding plus solver on one
/// entailment. Contradiction: an oracle counter-model while the solver
/// reports unsat, or an oracle "valid up to 3" while the solver returns a
/// model with at most 3 non-null locations.
pub fn agree_on(
    p: &Problem,
    e: &NormalizedEntailment,
    axioms: &[FoldUnfoldAxiom],
    solver: &Solver,
    timeout: Duration,
    acc: &mut Agreement,
) {
    const BOUND: u32 = 3;
    acc.instances += 1;
    if !axioms.is_empty() {
        acc.with_axioms += 1;
    }
    let q = QfEntailment {
        field_sorts: p.vocab.shape.sorts(),
        antecedents: vec![e.antecedent.clone()],
        axioms: axioms.iter().map(|a| a.sl.clone()).collect(),
        consequent: e.disjuncts[0].clone(),
    };
    let opts = OracleOptions { bound: BOUND, budget: 2_000_000, int_window: None };
    let oracle = match decide_qf_entailment(&q, &opts) {
        Ok(v) => v,
        Err(SemanticsError::Budget(_)) => {
            acc.oracle_budget += 1;
            return;
        }
        Err(e) => panic!("oracle: {e}"),
    };
    let mut consts = BTreeMap::new();
    for f in std::iter::once(&e.antecedent).chain(&e.disjuncts) {
        for c in f.constants() {
            consts.insert(c.name.clone(), c.sort);
        }
    }
    let sig = base_signature(&p.vocab.shape.sorts(), &p.sid, &consts);
    let defs: Vec<Assertion> = axioms
        .iter()
        .map(|a| Assertion { role: Role::Axiom, name: a.label(), sentence: a.fo.clone() })
        .collect();
    let o = encode_entailment(e, &p.sid, &sig, Some(defs)).expect("encodes");
    let verdict = solver.check(&o, timeout, false).expect("solver runs");
    let label = || {
        let ax: Vec<String> = axioms.iter().map(|a| a.render(&p.vocab.shape)).collect();
        format!("{} |- {} with axioms {ax:?}", e.antecedent, e.disjuncts[0])
    };
    match (&oracle, &verdict) {
        (OracleVerdict::ValidUpToBound { .. }, _) => acc.oracle_valid += 1,
        _ => {}
    }
    match (&oracle, verdict) {
        (OracleVerdict::Countermodel { model, eta }, SolverVerdict::Unsat { .. }) => acc
            .contradictions
            .push(format!("{}: oracle counter-model {model:?} at {eta:?}, solver unsat", label())),
        (OracleVerdict::ValidUpToBound { .. }, SolverVerdict::Sat { model: Some(m), .. }) if m.num_locs - 1 <= BOUND => {
            acc.contradictions.push(format!("{}: oracle valid up to {BOUND}, solver model {m:?}", label()))
        }
        (_, SolverVerdict::Unknown(_)) => acc.excluded += 1,
        _ => {}
    }
}
