//! Translation of separation-logic formulas, definitions and entailments
//! into first-order proof obligations.
//!
//! A universal-conjunctive formula becomes a pair `(fo, eta)`: `fo` states
//! that the formula holds for some heaplet, and `eta` (with the heaplet
//! variable `x*` free) describes that heaplet's members.

pub mod fo;

use crate::normalize::NormalizedEntailment;
use crate::sl::{Formula, Sid, Sort, Symbol, Term, NIL};
use fo::{xstar, Fo, Rel};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("formula is not universal conjunctive: {0}")]
    NotUniversalConjunctive(String),
}

/// Fresh-name supply for bound variables introduced by the encoding.
#[derive(Debug, Default)]
pub struct Encoder {
    counter: usize,
}

/// `forall x*. a <-> b`.
pub fn same_heaplet(a: &Fo, b: &Fo) -> Fo {
    Fo::forall(vec![xstar()], Fo::iff(a.clone(), b.clone()))
}

/// `not exists x*. a & b`.
pub fn disjoint(a: &Fo, b: &Fo) -> Fo {
    Fo::not(Fo::exists(vec![xstar()], Fo::and(vec![a.clone(), b.clone()])))
}

impl Encoder {
    pub fn new() -> Self {
        Encoder::default()
    }

    fn fresh(&mut self, base: &Symbol) -> Symbol {
        self.counter += 1;
        Symbol::new(format!("_{}{}", base.name.trim_start_matches('_'), self.counter), base.sort)
    }

    /// The `(fo, eta)` pair of a universal-conjunctive formula.
    pub fn encode_uc(&mut self, f: &Formula) -> Result<(Fo, Fo), EncodeError> {
        let x = Term::Var(xstar());
        Ok(match f {
            Formula::Eq(a, b) => (Fo::eq(a.clone(), b.clone()), Fo::False),
            Formula::Neq(a, b) => (Fo::neq(a.clone(), b.clone()), Fo::False),
            Formula::Lt(a, b) => (Fo::Lt(a.clone(), b.clone()), Fo::False),
            Formula::NotLt(a, b) => (Fo::not(Fo::Lt(a.clone(), b.clone())), Fo::False),
            Formula::Emp => (Fo::True, Fo::False),
            Formula::Pred(p, ts) => {
                let mut eta_args = ts.clone();
                eta_args.push(x);
                (Fo::rel(Rel::fo(p), ts.clone()), Fo::rel(Rel::eta(p), eta_args))
            }
            Formula::PointsTo(t, ts) => {
                let mut parts = vec![Fo::neq(t.clone(), Term::nil())];
                for (i, ti) in ts.iter().enumerate() {
                    parts.push(Fo::eq(ti.clone(), Term::field(i, ti.sort(), t.clone())));
                }
                (Fo::and(parts), Fo::eq(x, t.clone()))
            }
            Formula::And(v) => {
                let enc = v.iter().map(|c| self.encode_uc(c)).collect::<Result<Vec<_>, _>>()?;
                let eta0 = enc[0].1.clone();
                let mut parts: Vec<Fo> = enc.iter().map(|(f, _)| f.clone()).collect();
                for (_, e) in &enc[1..] {
                    parts.push(same_heaplet(&eta0, e));
                }
                (Fo::and(parts), eta0)
            }
            Formula::Sep(v) => {
                let enc = v.iter().map(|c| self.encode_uc(c)).collect::<Result<Vec<_>, _>>()?;
                let mut parts: Vec<Fo> = enc.iter().map(|(f, _)| f.clone()).collect();
                for i in 0..enc.len() {
                    for j in i + 1..enc.len() {
                        parts.push(disjoint(&enc[i].1, &enc[j].1));
                    }
                }
                (Fo::and(parts), Fo::or(enc.into_iter().map(|(_, e)| e).collect()))
            }
            Formula::Forall(vs, b) => {
                let (fo_b, eta_b) = self.encode_uc(b)?;
                let fv = eta_b.free_vars();
                let moving: Vec<&Symbol> = vs.iter().filter(|v| fv.contains(*v)).collect();
                let indep = if moving.is_empty() {
                    Fo::True
                } else {
                    let mut m1 = BTreeMap::new();
                    let mut m2 = BTreeMap::new();
                    let mut binders = vec![];
                    for v in &moving {
                        let (a, b) = (self.fresh(v), self.fresh(v));
                        m1.insert(v.name.clone(), Term::Var(a.clone()));
                        m2.insert(v.name.clone(), Term::Var(b.clone()));
                        binders.push(a);
                        binders.push(b);
                    }
                    binders.push(xstar());
                    Fo::forall(binders, Fo::iff(eta_b.subst(&m1), eta_b.subst(&m2)))
                };
                (Fo::and(vec![Fo::forall(vs.clone(), fo_b), indep]), Fo::exists(vs.clone(), eta_b))
            }
            other => return Err(EncodeError::NotUniversalConjunctive(other.to_string())),
        })
    }

    /// The definition constraint for one predicate.
    pub fn encode_def(&mut self, def: &crate::sl::PredDef) -> Result<Fo, EncodeError> {
        let xs: Vec<Term> = def.params.iter().map(|p| Term::Var(p.clone())).collect();
        let mut eta_args = xs.clone();
        eta_args.push(Term::Var(xstar()));
        let p_fo = Fo::rel(Rel::fo(&def.name), xs);
        let p_eta = Fo::rel(Rel::eta(&def.name), eta_args);
        let mut some_case = vec![];
        let mut heaplets = vec![];
        for j in 0..def.cases.len() {
            let ys = def.case_exists(j);
            let (fo_j, eta_j) = self.encode_uc(&def.cases[j])?;
            some_case.push(Fo::exists(ys.clone(), fo_j.clone()));
            heaplets.push(Fo::forall(ys, Fo::implies(fo_j, same_heaplet(&p_eta, &eta_j))));
        }
        Ok(Fo::forall(
            def.params.clone(),
            Fo::and(vec![Fo::iff(p_fo, Fo::or(some_case)), Fo::and(heaplets)]),
        ))
    }

    /// `Phi_fo`: the conjunction of all definition constraints.
    pub fn encode_sid(&mut self, sid: &Sid) -> Result<Fo, EncodeError> {
        let parts = sid.iter().map(|d| self.encode_def(d)).collect::<Result<Vec<_>, _>>()?;
        Ok(Fo::and(parts))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Definitions,
    Antecedent,
    Refutation,
    Axiom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub role: Role,
    pub name: String,
    pub sentence: Fo,
}

/// Sorts of everything an obligation may mention.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub field_sorts: Vec<Sort>,
    pub constants: BTreeMap<String, Sort>,
    pub preds: BTreeMap<String, Vec<Sort>>,
}

impl Signature {
    pub fn has_ints(&self) -> bool {
        self.field_sorts.contains(&Sort::Int)
            || self.constants.values().any(|s| *s == Sort::Int)
            || self.preds.values().any(|ss| ss.contains(&Sort::Int))
    }
}

/// The pieces of the refutation clause, kept for certificate reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefutationParts {
    pub antecedent_eta: Fo,
    pub exists: Vec<Symbol>,
    /// `(psi_i fo, psi_i eta)` per consequent disjunct.
    pub disjuncts: Vec<(Fo, Fo)>,
}

/// A set of closed FO sentences; unsatisfiable means the entailment holds
/// in every fixpoint model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub signature: Signature,
    pub assertions: Vec<Assertion>,
    pub refutation: Option<RefutationParts>,
}

impl Obligation {
    pub fn sentences(&self) -> impl Iterator<Item = &Fo> {
        self.assertions.iter().map(|a| &a.sentence)
    }

    pub fn with_assertions(&self, extra: Vec<Assertion>) -> Obligation {
        let mut o = self.clone();
        o.assertions.extend(extra);
        o.refresh_signature();
        o
    }

    /// Add constants appearing in the assertions to the signature.
    pub fn refresh_signature(&mut self) {
        for a in &self.assertions {
            for c in a.sentence.constants() {
                self.signature.constants.entry(c.name.clone()).or_insert(c.sort);
            }
        }
    }
}

/// The refutation clause
/// `forall u. /\_i ((forall x*. phi_eta <-> psi_i_eta) -> not psi_i_fo)`.
pub fn refutation_clause(parts: &RefutationParts) -> Fo {
    let conj = parts
        .disjuncts
        .iter()
        .map(|(fo_i, eta_i)| Fo::implies(same_heaplet(&parts.antecedent_eta, eta_i), Fo::not(fo_i.clone())))
        .collect();
    Fo::forall(parts.exists.clone(), Fo::and(conj))
}

pub fn base_signature(field_sorts: &[Sort], sid: &Sid, constants: &BTreeMap<String, Sort>) -> Signature {
    let mut consts = constants.clone();
    consts.insert(NIL.to_string(), Sort::Loc);
    Signature {
        field_sorts: field_sorts.to_vec(),
        constants: consts,
        preds: sid.iter().map(|d| (d.name.clone(), d.sorts())).collect(),
    }
}

/// `{Phi_fo, phi_fo, refutation}`. `defs` replaces `Phi_fo` when given
/// (the fold/unfold check uses the axioms instead).
pub fn encode_entailment(
    e: &NormalizedEntailment,
    sid: &Sid,
    signature: &Signature,
    defs: Option<Vec<Assertion>>,
) -> Result<Obligation, EncodeError> {
    let mut enc = Encoder::new();
    let (phi_fo, phi_eta) = enc.encode_uc(&e.antecedent)?;
    let disjuncts = e.disjuncts.iter().map(|d| enc.encode_uc(d)).collect::<Result<Vec<_>, _>>()?;
    let parts = RefutationParts { antecedent_eta: phi_eta, exists: e.exists.clone(), disjuncts };
    let mut assertions = match defs {
        Some(a) => a,
        None => vec![Assertion { role: Role::Definitions, name: "definitions".into(), sentence: enc.encode_sid(sid)? }],
    };
    assertions.push(Assertion { role: Role::Antecedent, name: "antecedent".into(), sentence: phi_fo });
    assertions.push(Assertion { role: Role::Refutation, name: "refutation".into(), sentence: refutation_clause(&parts) });
    let mut o = Obligation { signature: signature.clone(), assertions, refutation: Some(parts) };
    for s in &e.skolems {
        o.signature.constants.insert(s.name.clone(), s.sort);
    }
    o.refresh_signature();
    Ok(o)
}

/// Free variables of an FO formula, used to close sentences in tests.
pub fn free_names(f: &Fo) -> BTreeSet<String> {
    f.free_vars().into_iter().map(|s| s.name).collect()
}
