//! Finite reference semantics: explicit heap structures, the satisfaction
//! relation, the definition transformer and its least fixpoint, FO
//! evaluation and a bounded-model entailment oracle.

mod enumerate;
mod fixpoint;
mod fo_eval;
mod oracle;

pub use enumerate::{all_heaps, all_tuples, all_valuations, determined_interpretations};
pub use fixpoint::{is_determined_heap, is_fixpoint, lfp_interpret, transformer};
pub use fo_eval::{denote_heaplet, eval_fo, FoStructure};
pub use oracle::{decide_qf_entailment, OracleOptions, OracleVerdict, QfEntailment};

use crate::sl::{Formula, Sort, Term, NIL};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Loc(u32),
    Int(i64),
}

pub const NULL: Value = Value::Loc(0);

impl Value {
    pub fn default_of(sort: Sort) -> Value {
        match sort {
            Sort::Loc => NULL,
            Sort::Int => Value::Int(0),
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Loc(0) => write!(f, "null"),
            Value::Loc(l) => write!(f, "l{l}"),
            Value::Int(n) => write!(f, "{n}"),
        }
    }
}

/// A finite set of non-null locations as a bitmask (bit `l` for location `l`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Heaplet(pub u64);

impl Heaplet {
    pub const EMPTY: Heaplet = Heaplet(0);

    pub fn singleton(l: u32) -> Heaplet {
        Heaplet(1u64 << l)
    }
    pub fn contains(self, l: u32) -> bool {
        l < 64 && self.0 & (1u64 << l) != 0
    }
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    pub fn locs(self) -> impl Iterator<Item = u32> {
        (1..64u32).filter(move |l| self.contains(*l))
    }
    pub fn from_locs(locs: impl IntoIterator<Item = u32>) -> Heaplet {
        Heaplet(locs.into_iter().fold(0, |acc, l| acc | (1u64 << l)))
    }
    /// Every heaplet over the non-null locations `1..num_locs`.
    pub fn all(num_locs: u32) -> impl Iterator<Item = Heaplet> {
        let full = if num_locs <= 1 { 0 } else { ((1u64 << num_locs) - 1) & !1 };
        submasks(full).map(Heaplet)
    }
}

/// All submasks of `mask`, including 0 and `mask` itself.
pub fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut cur = Some(mask);
    std::iter::from_fn(move || {
        let c = cur?;
        cur = if c == 0 { None } else { Some((c - 1) & mask) };
        Some(c)
    })
}

impl Serialize for Heaplet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.locs().collect::<Vec<_>>().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Heaplet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        if v.iter().any(|l| *l == 0 || *l >= 64) {
            return Err(serde::de::Error::custom("heaplet locations must be in 1..64"));
        }
        Ok(Heaplet::from_locs(v))
    }
}

/// The integers a finite structure quantifies over. When `exhaustive` is
/// false the window is only a sample and integer quantification is refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntSlice {
    pub lo: i64,
    pub hi: i64,
    #[serde(default)]
    pub exhaustive: bool,
}

impl Default for IntSlice {
    fn default() -> Self {
        IntSlice { lo: 0, hi: 0, exhaustive: false }
    }
}

impl IntSlice {
    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("integer quantification over a non-exhaustive integer window")]
    NonExhaustiveInts,
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("undefined predicate `{0}`")]
    UnknownPredicate(String),
    #[error("structure has {0} locations, at most 63 non-null locations are supported")]
    TooManyLocations(u32),
    #[error("ill-formed structure: {0}")]
    IllFormed(String),
    #[error("resource budget of {0} candidate models exhausted")]
    Budget(u64),
}

/// What the satisfaction relation needs from a model.
pub trait SlModel {
    /// Number of locations including null (location 0).
    fn num_locs(&self) -> u32;
    fn ints(&self) -> IntSlice;
    /// Field `i` of a non-null allocated location.
    fn field(&self, loc: u32, i: usize) -> Option<Value>;
    fn arity(&self) -> usize;
    fn constant(&self, name: &str) -> Option<Value>;
    fn holds(&self, pred: &str, args: &[Value], eta: Heaplet) -> Result<bool, SemanticsError>;
}

pub type PredInterp = BTreeSet<(Vec<Value>, Heaplet)>;

/// An explicit finite structure: locations `0..num_locs` with 0 as null,
/// a total heap on non-null locations, constants and predicate
/// interpretations as sets of (tuple, heaplet) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeapStructure {
    pub num_locs: u32,
    #[serde(default)]
    pub ints: IntSlice,
    pub field_sorts: Vec<Sort>,
    /// `heap[l - 1]` is the record stored at location `l`.
    pub heap: Vec<Vec<Value>>,
    pub constants: BTreeMap<String, Value>,
    #[serde(default)]
    pub preds: BTreeMap<String, PredInterp>,
}

impl HeapStructure {
    pub fn validate(&self) -> Result<(), SemanticsError> {
        if self.num_locs == 0 || self.num_locs > 64 {
            return Err(SemanticsError::TooManyLocations(self.num_locs));
        }
        if self.heap.len() != self.num_locs as usize - 1 {
            return Err(SemanticsError::IllFormed(format!(
                "heap has {} records for {} non-null locations",
                self.heap.len(),
                self.num_locs - 1
            )));
        }
        let in_dom = |v: &Value, s: Sort| match (v, s) {
            (Value::Loc(l), Sort::Loc) => *l < self.num_locs,
            (Value::Int(_), Sort::Int) => true,
            _ => false,
        };
        for (i, rec) in self.heap.iter().enumerate() {
            if rec.len() != self.field_sorts.len() || !rec.iter().zip(&self.field_sorts).all(|(v, s)| in_dom(v, *s)) {
                return Err(SemanticsError::IllFormed(format!("bad record at location {}", i + 1)));
            }
        }
        if let Some(v) = self.constants.get(NIL) {
            if *v != NULL {
                return Err(SemanticsError::IllFormed("nil must denote null".into()));
            }
        }
        for (p, tuples) in &self.preds {
            for (_, h) in tuples {
                if h.locs().any(|l| l >= self.num_locs) {
                    return Err(SemanticsError::IllFormed(format!("heaplet of `{p}` out of range")));
                }
            }
        }
        Ok(())
    }

    pub fn with_preds(&self, preds: BTreeMap<String, PredInterp>) -> HeapStructure {
        HeapStructure { preds, ..self.clone() }
    }
}

impl SlModel for HeapStructure {
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
        self.constants.get(name).copied()
    }
    fn holds(&self, pred: &str, args: &[Value], eta: Heaplet) -> Result<bool, SemanticsError> {
        let interp = self.preds.get(pred).ok_or_else(|| SemanticsError::UnknownPredicate(pred.to_string()))?;
        Ok(interp.contains(&(args.to_vec(), eta)))
    }
}

/// A variable valuation.
pub type Env = Vec<(String, Value)>;

fn lookup(env: &Env, name: &str) -> Option<Value> {
    env.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v)
}

pub fn eval_term<M: SlModel + ?Sized>(m: &M, env: &Env, t: &Term) -> Result<Value, SemanticsError> {
    Ok(match t {
        Term::Int(n) => Value::Int(*n),
        Term::Const(s) => m.constant(&s.name).ok_or_else(|| SemanticsError::UnknownConstant(s.name.clone()))?,
        Term::Var(s) => lookup(env, &s.name).ok_or_else(|| SemanticsError::UnboundVariable(s.name.clone()))?,
        Term::Add(a, b) => match (eval_term(m, env, a)?, eval_term(m, env, b)?) {
            (Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_add(y)),
            _ => return Err(SemanticsError::IllFormed(format!("non-integer operand in `{t}`"))),
        },
        Term::Field { index, sort, base } => match eval_term(m, env, base)? {
            Value::Loc(l) => m.field(l, *index).unwrap_or(Value::default_of(*sort)),
            Value::Int(_) => return Err(SemanticsError::IllFormed(format!("field of an integer in `{t}`"))),
        },
    })
}

/// Values a variable of the given sort ranges over.
pub fn domain<M: SlModel + ?Sized>(m: &M, sort: Sort) -> Result<Vec<Value>, SemanticsError> {
    match sort {
        Sort::Loc => Ok((0..m.num_locs()).map(Value::Loc).collect()),
        Sort::Int => {
            let ints = m.ints();
            if !ints.exhaustive {
                return Err(SemanticsError::NonExhaustiveInts);
            }
            Ok(ints.values().map(Value::Int).collect())
        }
    }
}

/// `M, v, eta |= f`.
pub fn satisfies<M: SlModel + ?Sized>(m: &M, env: &mut Env, eta: Heaplet, f: &Formula) -> Result<bool, SemanticsError> {
    let ev = |env: &Env, t: &Term| eval_term(m, env, t);
    Ok(match f {
        Formula::Eq(a, b) => eta.is_empty() && ev(env, a)? == ev(env, b)?,
        Formula::Neq(a, b) => eta.is_empty() && ev(env, a)? != ev(env, b)?,
        Formula::Lt(a, b) | Formula::NotLt(a, b) => {
            if !eta.is_empty() {
                return Ok(false);
            }
            let lt = match (ev(env, a)?, ev(env, b)?) {
                (Value::Int(x), Value::Int(y)) => x < y,
                _ => return Err(SemanticsError::IllFormed("`<` on locations".into())),
            };
            lt == matches!(f, Formula::Lt(..))
        }
        Formula::Emp => eta.is_empty(),
        Formula::PointsTo(t, ts) => {
            let Value::Loc(l) = ev(env, t)? else {
                return Err(SemanticsError::IllFormed("points-to on an integer".into()));
            };
            if l == 0 || eta != Heaplet::singleton(l) {
                return Ok(false);
            }
            for (i, ti) in ts.iter().enumerate() {
                if m.field(l, i) != Some(ev(env, ti)?) {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Pred(p, ts) => {
            let args = ts.iter().map(|t| ev(env, t)).collect::<Result<Vec<_>, _>>()?;
            m.holds(p, &args, eta)?
        }
        Formula::And(v) => {
            for c in v {
                if !satisfies(m, env, eta, c)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(v) => {
            for c in v {
                if satisfies(m, env, eta, c)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Sep(v) => sat_sep(m, env, eta, v)?,
        Formula::Implies(a, b) => !satisfies(m, env, eta, a)? || satisfies(m, env, eta, b)?,
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            let is_ex = matches!(f, Formula::Exists(..));
            quantify(m, env, vs, 0, is_ex, &mut |env| satisfies(m, env, eta, b))?
        }
    })
}

fn sat_sep<M: SlModel + ?Sized>(
    m: &M,
    env: &mut Env,
    eta: Heaplet,
    parts: &[Formula],
) -> Result<bool, SemanticsError> {
    match parts {
        [] => Ok(eta.is_empty()),
        [only] => satisfies(m, env, eta, only),
        [first, rest @ ..] => {
            for sub in submasks(eta.0) {
                if satisfies(m, env, Heaplet(sub), first)? && sat_sep(m, env, Heaplet(eta.0 & !sub), rest)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Iterate all assignments of `vs[i..]` over their domains, combining the
/// results existentially or universally.
pub(crate) fn quantify<M: SlModel + ?Sized>(
    m: &M,
    env: &mut Env,
    vs: &[crate::sl::Symbol],
    i: usize,
    is_ex: bool,
    body: &mut dyn FnMut(&mut Env) -> Result<bool, SemanticsError>,
) -> Result<bool, SemanticsError> {
    if i == vs.len() {
        return body(env);
    }
    for d in domain(m, vs[i].sort)? {
        env.push((vs[i].name.clone(), d));
        let r = quantify(m, env, vs, i + 1, is_ex, body);
        env.pop();
        if r? == is_ex {
            return Ok(is_ex);
        }
    }
    Ok(!is_ex)
}
