//! Reading a Z3 model back as a finite FO structure.

use super::smtlib::field_name;
use crate::encode::fo::Rel;
use crate::encode::Signature;
use crate::semantics::{FoStructure, IntSlice, Value};
use crate::sexp::Sexp;
use crate::sl::{Sort, NIL};
use itertools::Itertools;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("model has integer-sorted symbols; no finite structure")]
    IntegerSort,
    #[error("cannot evaluate model expression `{0}`")]
    Eval(String),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("model universe of {0} elements is too large")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MVal {
    Bool(bool),
    Elem(u32),
    Int(i64),
}

struct Def {
    params: Vec<String>,
    body: Sexp,
}

struct Model {
    defs: HashMap<String, Def>,
    elems: HashMap<String, u32>,
}

impl Model {
    fn eval(&self, e: &Sexp, env: &[(String, MVal)]) -> Result<MVal, ModelError> {
        let bad = || ModelError::Eval(e.to_string());
        match e {
            Sexp::Atom(a) => {
                if a == "true" {
                    return Ok(MVal::Bool(true));
                }
                if a == "false" {
                    return Ok(MVal::Bool(false));
                }
                if let Ok(n) = a.parse::<i64>() {
                    return Ok(MVal::Int(n));
                }
                if let Some((_, v)) = env.iter().rev().find(|(n, _)| n == a) {
                    return Ok(*v);
                }
                if let Some(i) = self.elems.get(a) {
                    return Ok(MVal::Elem(*i));
                }
                self.apply(a, &[])
            }
            Sexp::Str(_) => Err(bad()),
            Sexp::List(v) => {
                let head = v.first().and_then(|h| h.atom()).ok_or_else(bad)?;
                let args = &v[1..];
                let ev = |x: &Sexp| self.eval(x, env);
                let bools = |xs: &[Sexp]| -> Result<Vec<bool>, ModelError> {
                    xs.iter()
                        .map(|x| match ev(x)? {
                            MVal::Bool(b) => Ok(b),
                            _ => Err(bad()),
                        })
                        .collect()
                };
                let ints = |xs: &[Sexp]| -> Result<Vec<i64>, ModelError> {
                    xs.iter()
                        .map(|x| match ev(x)? {
                            MVal::Int(n) => Ok(n),
                            _ => Err(bad()),
                        })
                        .collect()
                };
                Ok(match head {
                    "and" => MVal::Bool(bools(args)?.into_iter().all(|b| b)),
                    "or" => MVal::Bool(bools(args)?.into_iter().any(|b| b)),
                    "not" => MVal::Bool(!bools(args)?.first().copied().ok_or_else(bad)?),
                    "=>" => {
                        let b = bools(args)?;
                        MVal::Bool(!b[0] || b[1])
                    }
                    "xor" => {
                        let b = bools(args)?;
                        MVal::Bool(b[0] != b[1])
                    }
                    "=" => {
                        let vals = args.iter().map(ev).collect::<Result<Vec<_>, _>>()?;
                        MVal::Bool(vals.windows(2).all(|w| w[0] == w[1]))
                    }
                    "distinct" => {
                        let vals = args.iter().map(ev).collect::<Result<Vec<_>, _>>()?;
                        MVal::Bool(vals.iter().tuple_combinations().all(|(a, b)| a != b))
                    }
                    "ite" => match ev(&args[0])? {
                        MVal::Bool(true) => ev(&args[1])?,
                        MVal::Bool(false) => ev(&args[2])?,
                        _ => return Err(bad()),
                    },
                    "let" => {
                        let binds = args[0].list().ok_or_else(bad)?;
                        let mut inner = env.to_vec();
                        for b in binds {
                            let pair = b.list().ok_or_else(bad)?;
                            let name = pair[0].atom().ok_or_else(bad)?;
                            inner.push((name.to_string(), ev(&pair[1])?));
                        }
                        self.eval(&args[1], &inner)?
                    }
                    "+" => MVal::Int(ints(args)?.into_iter().sum()),
                    "*" => MVal::Int(ints(args)?.into_iter().product()),
                    "-" => {
                        let n = ints(args)?;
                        if n.len() == 1 {
                            MVal::Int(-n[0])
                        } else {
                            MVal::Int(n[0] - n[1..].iter().sum::<i64>())
                        }
                    }
                    "<" | "<=" | ">" | ">=" => {
                        let n = ints(args)?;
                        MVal::Bool(match head {
                            "<" => n[0] < n[1],
                            "<=" => n[0] <= n[1],
                            ">" => n[0] > n[1],
                            _ => n[0] >= n[1],
                        })
                    }
                    f => {
                        let vals = args.iter().map(ev).collect::<Result<Vec<_>, _>>()?;
                        self.apply(f, &vals)?
                    }
                })
            }
        }
    }

    fn apply(&self, f: &str, args: &[MVal]) -> Result<MVal, ModelError> {
        let d = self.defs.get(f).ok_or_else(|| ModelError::Eval(f.to_string()))?;
        if d.params.len() != args.len() {
            return Err(ModelError::Eval(f.to_string()));
        }
        let env: Vec<(String, MVal)> = d.params.iter().cloned().zip(args.iter().copied()).collect();
        self.eval(&d.body, &env)
    }
}

fn collect_elems(s: &Sexp, out: &mut BTreeSet<String>) {
    match s {
        Sexp::Atom(a) if a.starts_with("Loc!val!") => {
            out.insert(a.clone());
        }
        Sexp::List(v) => v.iter().for_each(|x| collect_elems(x, out)),
        _ => {}
    }
}

pub const MAX_MODEL_LOCS: usize = 60;

/// Tabulate a Z3 model of a theory-free obligation as a finite structure.
/// Universe elements are renumbered so that `nil` is location 0.
pub fn extract_finite_model(model: &Sexp, sig: &Signature) -> Result<FoStructure, ModelError> {
    if sig.has_ints() {
        return Err(ModelError::IntegerSort);
    }
    let items = model.list().ok_or_else(|| ModelError::Malformed("model is not a list".into()))?;
    let items: &[Sexp] = if items.first().and_then(|h| h.atom()) == Some("model") { &items[1..] } else { items };
    let mut names = BTreeSet::new();
    collect_elems(model, &mut names);
    let mut defs = HashMap::new();
    for it in items {
        let Some(v) = it.list() else { continue };
        if v.first().and_then(|h| h.atom()) != Some("define-fun") || v.len() != 5 {
            continue;
        }
        let name = v[1].atom().ok_or_else(|| ModelError::Malformed(it.to_string()))?;
        let params = v[2]
            .list()
            .ok_or_else(|| ModelError::Malformed(it.to_string()))?
            .iter()
            .map(|p| p.list().and_then(|l| l.first()).and_then(|n| n.atom()).map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| ModelError::Malformed(it.to_string()))?;
        defs.insert(name.to_string(), Def { params, body: v[4].clone() });
    }
    let mut m = Model { defs, elems: HashMap::new() };
    // Sort universe elements by their numeric suffix.
    let mut names: Vec<String> = names.into_iter().collect();
    names.sort_by_key(|n| n.trim_start_matches("Loc!val!").parse::<u64>().unwrap_or(u64::MAX));
    if names.is_empty() {
        names.push("Loc!val!0".to_string());
    }
    if names.len() > MAX_MODEL_LOCS {
        return Err(ModelError::TooLarge(names.len()));
    }
    for (i, n) in names.iter().enumerate() {
        m.elems.insert(n.clone(), i as u32);
    }
    let raw_const = |m: &Model, c: &str| -> Result<u32, ModelError> {
        match m.defs.get(c) {
            None => Ok(0),
            Some(_) => match m.apply(c, &[])? {
                MVal::Elem(e) => Ok(e),
                _ => Err(ModelError::Eval(c.to_string())),
            },
        }
    };
    let nil_raw = raw_const(&m, NIL)?;
    let n = names.len() as u32;
    // Swap nil's element with element 0.
    let to_loc = |e: u32| -> u32 {
        if e == nil_raw {
            0
        } else if e == 0 {
            nil_raw
        } else {
            e
        }
    };
    let from_loc = to_loc;
    let mut constants = BTreeMap::new();
    for (c, s) in &sig.constants {
        debug_assert_eq!(*s, Sort::Loc);
        constants.insert(c.clone(), Value::Loc(to_loc(raw_const(&m, c)?)));
    }
    let mut fields = vec![];
    for (i, _) in sig.field_sorts.iter().enumerate() {
        let f = field_name(i);
        let mut col = vec![];
        for l in 0..n {
            let v = if m.defs.contains_key(&f) {
                match m.apply(&f, &[MVal::Elem(from_loc(l))])? {
                    MVal::Elem(e) => Value::Loc(to_loc(e)),
                    _ => return Err(ModelError::Eval(f)),
                }
            } else {
                Value::Loc(0)
            };
            col.push(v);
        }
        fields.push(col);
    }
    let mut relations = BTreeMap::new();
    for (p, sorts) in &sig.preds {
        for (rel, arity) in [(Rel::fo(p), sorts.len()), (Rel::eta(p), sorts.len() + 1)] {
            let name = rel.name();
            let mut set = BTreeSet::new();
            if m.defs.contains_key(&name) {
                let tuples: Vec<Vec<u32>> = if arity == 0 {
                    vec![vec![]]
                } else {
                    (0..arity).map(|_| 0..n).multi_cartesian_product().collect()
                };
                for t in tuples {
                    let args: Vec<MVal> = t.iter().map(|l| MVal::Elem(from_loc(*l))).collect();
                    match m.apply(&name, &args)? {
                        MVal::Bool(true) => {
                            set.insert(t.iter().map(|l| Value::Loc(*l)).collect::<Vec<_>>());
                        }
                        MVal::Bool(false) => {}
                        _ => return Err(ModelError::Eval(name.clone())),
                    }
                }
            }
            relations.insert(rel, set);
        }
    }
    Ok(FoStructure {
        num_locs: n,
        ints: IntSlice::default(),
        constants,
        field_sorts: sig.field_sorts.clone(),
        fields,
        relations,
    })
}
