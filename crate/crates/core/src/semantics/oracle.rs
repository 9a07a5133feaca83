//! Bounded-model decision procedure for small entailments, used as an
//! independent check on the encoding and the solver.
//!
//! Candidate models are enumerated up to a bound on non-null locations.
//! Symbols are placed canonically (restricted growth over locations), and
//! heap contents and predicate interpretations are only enumerated on the
//! locations and tuples the formulas can observe.

use super::*;
use crate::sl::{Formula, Symbol};
use itertools::Itertools;

#[derive(Debug, Clone)]
pub struct QfEntailment {
    pub field_sorts: Vec<Sort>,
    /// Evaluated at the candidate heaplet.
    pub antecedents: Vec<Formula>,
    /// Assumed to hold at every heaplet (fold/unfold axioms).
    pub axioms: Vec<Formula>,
    pub consequent: Formula,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Maximum number of non-null locations.
    pub bound: u32,
    /// Maximum number of candidate structures examined.
    pub budget: u64,
    /// Integer window for integer-sorted symbols and fields; defaults to
    /// `0..k` for `k` integer symbols.
    pub int_window: Option<(i64, i64)>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { bound: 3, budget: 20_000_000, int_window: None }
    }
}

#[derive(Debug, Clone)]
pub enum OracleVerdict {
    /// No counter-model with at most `bound` non-null locations.
    ValidUpToBound { bound: u32, candidates: u64 },
    Countermodel { model: HeapStructure, eta: Heaplet },
}

impl OracleVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, OracleVerdict::ValidUpToBound { .. })
    }
}

struct Candidate {
    num_locs: u32,
    ints: IntSlice,
    field_sorts: Vec<Sort>,
    heap: Vec<Vec<Value>>,
    consts: BTreeMap<String, Value>,
    tuples: Vec<(String, Vec<Value>)>,
    choice: Vec<Option<Heaplet>>,
}

impl SlModel for Candidate {
    fn num_locs(&self) -> u32 {
        self.num_locs
    }
    fn ints(&self) -> IntSlice {
        self.ints
    }
    fn field(&self, loc: u32, i: usize) -> Option<Value> {
        if loc == 0 {
            return None;
        }
        self.heap.get(loc as usize - 1).and_then(|r| r.get(i)).copied()
    }
    fn arity(&self) -> usize {
        self.field_sorts.len()
    }
    fn constant(&self, name: &str) -> Option<Value> {
        if name == NIL {
            return Some(NULL);
        }
        self.consts.get(name).copied()
    }
    fn holds(&self, pred: &str, args: &[Value], eta: Heaplet) -> Result<bool, SemanticsError> {
        for (i, (p, t)) in self.tuples.iter().enumerate() {
            if p == pred && t.as_slice() == args {
                return Ok(self.choice[i] == Some(eta));
            }
        }
        Ok(false)
    }
}

impl Candidate {
    fn to_structure(&self) -> HeapStructure {
        let mut preds: BTreeMap<String, PredInterp> = BTreeMap::new();
        for ((p, t), c) in self.tuples.iter().zip(&self.choice) {
            let e = preds.entry(p.clone()).or_default();
            if let Some(h) = c {
                e.insert((t.clone(), *h));
            }
        }
        HeapStructure {
            num_locs: self.num_locs,
            ints: self.ints,
            field_sorts: self.field_sorts.clone(),
            heap: self.heap.clone(),
            constants: self.consts.clone(),
            preds,
        }
    }
}

/// Restricted-growth assignments of `k` symbols to locations `0..=n`.
fn canonical_placements(k: usize, n: u32) -> Vec<Vec<u32>> {
    fn go(k: usize, n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..=(max + 1).min(n) {
            cur.push(v);
            go(k, n, max.max(v), cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    go(k, n, 0, &mut vec![], &mut out);
    out
}

fn ground(t: &Term) -> bool {
    let mut fv = BTreeSet::new();
    t.free_vars_into(&mut fv);
    fv.is_empty() && !t.has_field()
}

/// Pred atoms with ground arguments, and whether some atom or points-to is
/// not ground (in which case everything is relevant).
fn scan(fs: &[&Formula]) -> (Vec<(String, Vec<Term>)>, Vec<Term>, bool, bool) {
    let mut atoms = vec![];
    let mut bases = vec![];
    let mut all_tuples = false;
    let mut all_locs = false;
    for f in fs {
        f.visit(&mut |g| match g {
            Formula::Pred(p, ts) => {
                if ts.iter().all(ground) {
                    atoms.push((p.clone(), ts.clone()));
                } else {
                    all_tuples = true;
                }
            }
            Formula::PointsTo(t, _) => {
                if ground(t) {
                    bases.push(t.clone());
                } else {
                    all_locs = true;
                }
            }
            _ => {}
        });
        if f.has_field_terms() {
            all_locs = true;
        }
    }
    (atoms, bases, all_tuples, all_locs)
}

/// Decide `Gamma |= psi` over structures with at most `bound` non-null
/// locations, treating free variables as constants.
pub fn decide_qf_entailment(q: &QfEntailment, opts: &OracleOptions) -> Result<OracleVerdict, SemanticsError> {
    if opts.bound > 62 {
        return Err(SemanticsError::TooManyLocations(opts.bound + 1));
    }
    let all: Vec<&Formula> = q.antecedents.iter().chain(&q.axioms).chain(std::iter::once(&q.consequent)).collect();
    let mut syms: BTreeSet<Symbol> = BTreeSet::new();
    for f in &all {
        syms.extend(f.constants());
        syms.extend(f.free_vars());
    }
    syms.retain(|s| s.name != NIL);
    let names: BTreeSet<String> = syms.iter().map(|s| s.name.clone()).collect();
    let ants: Vec<Formula> = q.antecedents.iter().map(|f| f.constify(&names)).collect();
    let axioms: Vec<Formula> = q.axioms.iter().map(|f| f.constify(&names)).collect();
    let cons = q.consequent.constify(&names);
    let all: Vec<&Formula> = ants.iter().chain(&axioms).chain(std::iter::once(&cons)).collect();

    let loc_syms: Vec<&Symbol> = syms.iter().filter(|s| s.sort == Sort::Loc).collect();
    let int_syms: Vec<&Symbol> = syms.iter().filter(|s| s.sort == Sort::Int).collect();
    let (lo, hi) = opts.int_window.unwrap_or((0, (int_syms.len() as i64 - 1).max(0)));
    let ints = IntSlice { lo, hi, exhaustive: true };
    let (atoms, bases, all_tuples, all_locs) = scan(&all);
    let preds: BTreeMap<String, Vec<Sort>> = {
        let mut m = BTreeMap::new();
        for f in &all {
            f.visit(&mut |g| {
                if let Formula::Pred(p, ts) = g {
                    m.insert(p.clone(), ts.iter().map(|t| t.sort()).collect());
                }
            });
        }
        m
    };

    let mut candidates: u64 = 0;
    for n in 0..=opts.bound {
        let num_locs = n + 1;
        let int_vals: Vec<Vec<Value>> =
            int_syms.iter().map(|_| ints.values().map(Value::Int).collect()).collect();
        let int_assigns: Vec<Vec<Value>> = if int_vals.is_empty() {
            vec![vec![]]
        } else {
            int_vals.into_iter().multi_cartesian_product().collect()
        };
        for placement in canonical_placements(loc_syms.len(), n) {
            for iv in &int_assigns {
                let mut consts = BTreeMap::new();
                for (s, l) in loc_syms.iter().zip(&placement) {
                    consts.insert(s.name.clone(), Value::Loc(*l));
                }
                for (s, v) in int_syms.iter().zip(iv) {
                    consts.insert(s.name.clone(), *v);
                }
                let mut cand = Candidate {
                    num_locs,
                    ints,
                    field_sorts: q.field_sorts.clone(),
                    heap: vec![q.field_sorts.iter().map(|s| Value::default_of(*s)).collect(); n as usize],
                    consts,
                    tuples: vec![],
                    choice: vec![],
                };
                let env: Env = vec![];
                let relevant_locs: Vec<u32> = if all_locs {
                    (1..num_locs).collect()
                } else {
                    let mut s = BTreeSet::new();
                    for b in &bases {
                        if let Value::Loc(l) = eval_term(&cand, &env, b)? {
                            if l != 0 {
                                s.insert(l);
                            }
                        }
                    }
                    s.into_iter().collect()
                };
                let tuples: Vec<(String, Vec<Value>)> = if all_tuples {
                    let mut v = vec![];
                    for (p, sorts) in &preds {
                        let doms = sorts.iter().map(|s| domain(&cand, *s)).collect::<Result<Vec<_>, _>>()?;
                        let prod: Vec<Vec<Value>> = if doms.is_empty() {
                            vec![vec![]]
                        } else {
                            doms.into_iter().multi_cartesian_product().collect()
                        };
                        v.extend(prod.into_iter().map(|t| (p.clone(), t)));
                    }
                    v
                } else {
                    let mut s = BTreeSet::new();
                    for (p, ts) in &atoms {
                        let args = ts.iter().map(|t| eval_term(&cand, &env, t)).collect::<Result<Vec<_>, _>>()?;
                        s.insert((p.clone(), args));
                    }
                    s.into_iter().collect()
                };
                cand.choice = vec![None; tuples.len()];
                cand.tuples = tuples;

                // Odometer over heap cells of relevant locations.
                let cell_doms: Vec<Vec<Value>> = relevant_locs
                    .iter()
                    .flat_map(|_| q.field_sorts.iter())
                    .map(|s| domain(&cand, *s))
                    .collect::<Result<_, _>>()?;
                let heaplets: Vec<Option<Heaplet>> =
                    std::iter::once(None).chain(Heaplet::all(num_locs).map(Some)).collect();
                let mut cell_idx = vec![0usize; cell_doms.len()];
                loop {
                    for (k, &l) in relevant_locs.iter().enumerate() {
                        for i in 0..q.field_sorts.len() {
                            let c = k * q.field_sorts.len() + i;
                            cand.heap[l as usize - 1][i] = cell_doms[c][cell_idx[c]];
                        }
                    }
                    let mut choice_idx = vec![0usize; cand.tuples.len()];
                    loop {
                        for (i, c) in choice_idx.iter().enumerate() {
                            cand.choice[i] = heaplets[*c];
                        }
                        candidates += 1;
                        if candidates > opts.budget {
                            return Err(SemanticsError::Budget(opts.budget));
                        }
                        if let Some(eta) = counter_heaplet(&cand, &ants, &axioms, &cons)? {
                            return Ok(OracleVerdict::Countermodel { model: cand.to_structure(), eta });
                        }
                        if !advance(&mut choice_idx, |_| heaplets.len()) {
                            break;
                        }
                    }
                    if !advance(&mut cell_idx, |c| cell_doms[c].len()) {
                        break;
                    }
                }
            }
        }
    }
    Ok(OracleVerdict::ValidUpToBound { bound: opts.bound, candidates })
}

fn advance(idx: &mut [usize], size: impl Fn(usize) -> usize) -> bool {
    for i in 0..idx.len() {
        idx[i] += 1;
        if idx[i] < size(i) {
            return true;
        }
        idx[i] = 0;
    }
    false
}

fn counter_heaplet(
    m: &Candidate,
    ants: &[Formula],
    axioms: &[Formula],
    cons: &Formula,
) -> Result<Option<Heaplet>, SemanticsError> {
    let mut env = vec![];
    for eta in Heaplet::all(m.num_locs) {
        for ax in axioms {
            if !satisfies(m, &mut env, eta, ax)? {
                return Ok(None);
            }
        }
    }
    'eta: for eta in Heaplet::all(m.num_locs) {
        for a in ants {
            if !satisfies(m, &mut env, eta, a)? {
                continue 'eta;
            }
        }
        if !satisfies(m, &mut env, eta, cons)? {
            return Ok(Some(eta));
        }
    }
    Ok(None)
}
