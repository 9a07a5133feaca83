use super::{Formula, Sid, Symbol};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FragmentError {
    #[error("predicate `{pred}` case {case}: {reason}")]
    BadCase { pred: String, case: usize, reason: String },
    #[error("predicate `{pred}` calls undefined predicate `{callee}`")]
    Undefined { pred: String, callee: String },
    #[error("predicate `{pred}` calls `{callee}` with {found} arguments, expected {expected}")]
    Arity { pred: String, callee: String, found: usize, expected: usize },
    #[error("formula is not in the EDH fragment: {0}")]
    NotEdh(EdhWitness),
}

/// Where and why a formula leaves the EDH shape. `path` lists child indices
/// from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdhWitness {
    pub path: Vec<usize>,
    pub reason: String,
}

impl std::fmt::Display for EdhWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(f, "{} (at /{})", self.reason, p.join("/"))
    }
}

/// Quantifier-free and built from atoms with `&` and `*` only.
pub fn is_qf_conjunctive(f: &Formula) -> bool {
    qf_conj_violation(f, &mut vec![]).is_none()
}

fn qf_conj_violation(f: &Formula, path: &mut Vec<usize>) -> Option<EdhWitness> {
    let bad = |path: &Vec<usize>, what: &str| Some(EdhWitness { path: path.clone(), reason: what.to_string() });
    match f {
        Formula::Or(_) => bad(path, "disjunction inside a conjunctive block"),
        Formula::Exists(..) => bad(path, "existential inside a conjunctive block"),
        Formula::Forall(..) => bad(path, "universal inside a conjunctive block"),
        Formula::Implies(..) => bad(path, "implication outside an axiom"),
        Formula::And(v) | Formula::Sep(v) => {
            for (i, c) in v.iter().enumerate() {
                path.push(i);
                if let Some(w) = qf_conj_violation(c, path) {
                    return Some(w);
                }
                path.pop();
            }
            None
        }
        _ => None,
    }
}

/// Check the shape `exists y. \/_i forall u_i. phi_i` with every `phi_i`
/// quantifier-free conjunctive.
pub fn check_edh(f: &Formula) -> Result<(), EdhWitness> {
    let mut path = vec![];
    let mut cur = f;
    while let Formula::Exists(_, b) = cur {
        path.push(0);
        cur = b;
    }
    let disjuncts: Vec<&Formula> = match cur {
        Formula::Or(v) => v.iter().collect(),
        other => vec![other],
    };
    let single = disjuncts.len() == 1 && !matches!(cur, Formula::Or(_));
    for (i, d) in disjuncts.into_iter().enumerate() {
        let mut p = path.clone();
        if !single {
            p.push(i);
        }
        let mut body = d;
        while let Formula::Forall(_, b) = body {
            p.push(0);
            body = b;
        }
        if let Formula::Exists(..) = body {
            return Err(EdhWitness { path: p, reason: "existential below a universal or disjunction".into() });
        }
        if let Some(w) = qf_conj_violation(body, &mut p) {
            return Err(w);
        }
    }
    Ok(())
}

/// Every case quantifier-free conjunctive, closed over params and
/// existentials, and every call resolved with matching arity.
pub fn check_sid(sid: &Sid) -> Result<(), FragmentError> {
    for def in sid.iter() {
        let bound: BTreeSet<&Symbol> = def.params.iter().chain(def.exists.iter()).collect();
        for (j, case) in def.cases.iter().enumerate() {
            if let Some(w) = qf_conj_violation(case, &mut vec![]) {
                return Err(FragmentError::BadCase { pred: def.name.clone(), case: j, reason: w.reason });
            }
            if case.has_field_terms() {
                return Err(FragmentError::BadCase {
                    pred: def.name.clone(),
                    case: j,
                    reason: "field selector term in a definition".into(),
                });
            }
            for v in case.free_vars() {
                if !bound.contains(&v) {
                    return Err(FragmentError::BadCase {
                        pred: def.name.clone(),
                        case: j,
                        reason: format!("unbound variable `{}`", v.name),
                    });
                }
            }
            let mut err = None;
            case.visit(&mut |f| {
                if let (None, Formula::Pred(p, args)) = (&err, f) {
                    match sid.get(p) {
                        None => err = Some(FragmentError::Undefined { pred: def.name.clone(), callee: p.clone() }),
                        Some(d) if d.params.len() != args.len() => {
                            err = Some(FragmentError::Arity {
                                pred: def.name.clone(),
                                callee: p.clone(),
                                found: args.len(),
                                expected: d.params.len(),
                            })
                        }
                        _ => {}
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(())
}

/// Syntactic heap-reduction: every case either calls no predicate or has a
/// points-to atom as a top-level separating conjunct (modulo flattening).
pub fn is_heap_reducing(sid: &Sid) -> bool {
    sid.iter().all(|d| d.cases.iter().all(case_reduces_heap))
}

fn case_reduces_heap(case: &Formula) -> bool {
    if case.pred_names().is_empty() {
        return true;
    }
    match case {
        Formula::Sep(parts) => parts.iter().any(|p| matches!(p, Formula::PointsTo(..))),
        _ => false,
    }
}
