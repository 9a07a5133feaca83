//! Reduction of an EDH entailment `Gamma |- psi` to entailments with a
//! single universal-conjunctive antecedent and an existential-disjunctive
//! consequent, plus the optional inlining of existentials that are
//! determined by a points-to field.

use crate::sl::{check_edh, EdhWitness, Formula, PredDef, Problem, Sid, Sort, Symbol, Term};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub const DEFAULT_BLOWUP_LIMIT: usize = 4096;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("{side} is not in the EDH fragment: {witness}")]
    NotEdh { side: &'static str, witness: EdhWitness },
    #[error("disjunctive normal form would produce {count} entailments (limit {limit})")]
    Blowup { count: usize, limit: usize },
}

/// `phi |- exists u. \/_i psi_i` with `phi` and every `psi_i` universal
/// conjunctive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedEntailment {
    pub antecedent: Formula,
    pub exists: Vec<Symbol>,
    pub disjuncts: Vec<Formula>,
    /// Constants introduced by skolemisation.
    pub skolems: Vec<Symbol>,
}

/// Split `exists y. \/_i B_i` into its binder and disjuncts.
fn edh_parts(f: &Formula) -> (Vec<Symbol>, Vec<Formula>) {
    let mut ys = vec![];
    let mut cur = f;
    while let Formula::Exists(vs, b) = cur {
        ys.extend(vs.iter().cloned());
        cur = b;
    }
    let ds = match cur {
        Formula::Or(v) => v.clone(),
        other => vec![other.clone()],
    };
    (ys, ds)
}

/// Replace the outer existentials of each antecedent by fresh constants
/// `_sk<n>`.
pub fn skolemize(gamma: &[Formula], counter: &mut usize) -> (Vec<Formula>, Vec<Symbol>) {
    let mut out = vec![];
    let mut consts = vec![];
    for g in gamma {
        let (ys, ds) = edh_parts(g);
        let mut map = BTreeMap::new();
        for y in ys {
            let c = Symbol::new(format!("_sk{}", *counter), y.sort);
            *counter += 1;
            map.insert(y.name.clone(), Term::Const(c.clone()));
            consts.push(c);
        }
        let body = Formula::or(ds.iter().map(|d| d.subst(&map)).collect());
        out.push(body);
    }
    (out, consts)
}

/// Distribute the antecedent disjunctions into one entailment per
/// combination of disjuncts.
pub fn split_entailment(
    gamma_sk: &[Formula],
    psi: &Formula,
    limit: usize,
) -> Result<Vec<NormalizedEntailment>, NormalizeError> {
    let choices: Vec<Vec<Formula>> = gamma_sk.iter().map(|g| edh_parts(g).1).collect();
    let count = choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len())).unwrap_or(usize::MAX);
    if count > limit {
        return Err(NormalizeError::Blowup { count, limit });
    }
    let (exists, disjuncts) = edh_parts(psi);
    let mut combos: Vec<Vec<Formula>> = vec![vec![]];
    for c in &choices {
        let mut next = vec![];
        for prefix in &combos {
            for d in c {
                let mut p = prefix.clone();
                p.push(d.clone());
                next.push(p);
            }
        }
        combos = next;
    }
    Ok(combos
        .into_iter()
        .map(|parts| NormalizedEntailment {
            antecedent: if parts.is_empty() { Formula::Emp } else { Formula::and(parts) },
            exists: exists.clone(),
            disjuncts: disjuncts.clone(),
            skolems: vec![],
        })
        .collect())
}

/// Fragment checks, skolemisation and splitting for a parsed problem.
pub fn normalize(problem: &Problem, limit: usize) -> Result<Vec<NormalizedEntailment>, NormalizeError> {
    for a in &problem.antecedents {
        check_edh(a).map_err(|w| NormalizeError::NotEdh { side: "antecedent", witness: w })?;
    }
    check_edh(&problem.consequent).map_err(|w| NormalizeError::NotEdh { side: "consequent", witness: w })?;
    let mut counter = 0;
    let (gamma, skolems) = skolemize(&problem.antecedents, &mut counter);
    let mut out = split_entailment(&gamma, &problem.consequent, limit)?;
    for e in &mut out {
        e.skolems = skolems.clone();
    }
    Ok(out)
}

/// Points-to atoms reachable through `&`, `*` and universal blocks.
fn positive_points_to(f: &Formula, out: &mut Vec<(Term, Vec<Term>)>) {
    match f {
        Formula::PointsTo(t, ts) => out.push((t.clone(), ts.clone())),
        Formula::And(v) | Formula::Sep(v) => v.iter().for_each(|c| positive_points_to(c, out)),
        Formula::Forall(_, b) => positive_points_to(b, out),
        _ => {}
    }
}

fn bound_vars(f: &Formula, out: &mut BTreeSet<String>) {
    if let Formula::Forall(vs, _) | Formula::Exists(vs, _) = f {
        out.extend(vs.iter().map(|v| v.name.clone()));
    }
    for c in f.children() {
        bound_vars(c, out);
    }
}

/// Eliminate existentials `u` of `body` that occur as a field of a points-to
/// atom on a term free of quantified variables, replacing `u` by `m_i(t)`.
/// Returns the rewritten body and the variables that remain.
pub fn inline_in(body: &Formula, vars: &[Symbol], field_sorts: &[Sort]) -> (Formula, Vec<Symbol>) {
    let mut body = body.clone();
    let mut remaining: Vec<Symbol> = vars.to_vec();
    loop {
        let mut quantified: BTreeSet<String> = remaining.iter().map(|v| v.name.clone()).collect();
        bound_vars(&body, &mut quantified);
        let mut ptos = vec![];
        positive_points_to(&body, &mut ptos);
        let mut found = None;
        'search: for (base, fields) in &ptos {
            if quantified.iter().any(|q| base.mentions_var(q)) {
                continue;
            }
            for (i, fld) in fields.iter().enumerate() {
                if let Term::Var(s) = fld {
                    if remaining.contains(s) {
                        let sort = field_sorts.get(i).copied().unwrap_or(s.sort);
                        found = Some((s.clone(), Term::field(i, sort, base.clone())));
                        break 'search;
                    }
                }
            }
        }
        match found {
            None => return (body, remaining),
            Some((u, t)) => {
                let map = BTreeMap::from([(u.name.clone(), t)]);
                body = body.subst(&map);
                remaining.retain(|v| *v != u);
            }
        }
    }
}

pub fn inline_points_to_existentials(e: &NormalizedEntailment, field_sorts: &[Sort]) -> NormalizedEntailment {
    let mut keep: BTreeSet<Symbol> = BTreeSet::new();
    let mut disjuncts = vec![];
    for d in &e.disjuncts {
        let (nd, rem) = inline_in(d, &e.exists, field_sorts);
        keep.extend(rem);
        disjuncts.push(nd);
    }
    NormalizedEntailment {
        antecedent: e.antecedent.clone(),
        exists: e.exists.iter().filter(|v| keep.contains(v)).cloned().collect(),
        disjuncts,
        skolems: e.skolems.clone(),
    }
}

/// The same inlining applied to each definition case.
pub fn inline_sid(sid: &Sid, field_sorts: &[Sort]) -> Sid {
    let mut out = Sid::default();
    for def in sid.iter() {
        let mut keep = BTreeSet::new();
        let mut cases = vec![];
        for j in 0..def.cases.len() {
            let (c, rem) = inline_in(&def.cases[j], &def.case_exists(j), field_sorts);
            keep.extend(rem);
            cases.push(c);
        }
        out.insert(PredDef {
            name: def.name.clone(),
            params: def.params.clone(),
            exists: def.exists.iter().filter(|y| keep.contains(*y)).cloned().collect(),
            cases,
        });
    }
    out
}
