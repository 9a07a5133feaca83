//! Separation-logic syntax: sorts, terms, formulas, vocabularies and
//! systems of inductive definitions.

mod fragment;

pub use fragment::{check_edh, check_sid, is_heap_reducing, is_qf_conjunctive, EdhWitness, FragmentError};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// The two sorts of the logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Loc,
    Int,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Loc => write!(f, "loc"),
            Sort::Int => write!(f, "int"),
        }
    }
}

/// A sorted name, used both for variables and constants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub sort: Sort,
}

impl Symbol {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Symbol { name: name.into(), sort }
    }
    pub fn loc(name: impl Into<String>) -> Self {
        Symbol::new(name, Sort::Loc)
    }
    pub fn int(name: impl Into<String>) -> Self {
        Symbol::new(name, Sort::Int)
    }
}

pub const NIL: &str = "nil";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
    Int(i64),
    Add(Box<Term>, Box<Term>),
    /// `m_i(t)`: the i-th (0-based) record field of `t`. Only produced by
    /// existential inlining ahead of FO encoding.
    Field { index: usize, sort: Sort, base: Box<Term> },
}

impl Term {
    pub fn nil() -> Term {
        Term::Const(Symbol::loc(NIL))
    }
    pub fn var(name: &str, sort: Sort) -> Term {
        Term::Var(Symbol::new(name, sort))
    }
    pub fn cnst(name: &str, sort: Sort) -> Term {
        Term::Const(Symbol::new(name, sort))
    }
    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }
    pub fn field(index: usize, sort: Sort, base: Term) -> Term {
        Term::Field { index, sort, base: Box::new(base) }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Const(s) | Term::Var(s) => s.sort,
            Term::Int(_) | Term::Add(..) => Sort::Int,
            Term::Field { sort, .. } => *sort,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Const(s) if s.name == NIL)
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Term::Var(s) => {
                out.insert(s.clone());
            }
            Term::Const(_) | Term::Int(_) => {}
            Term::Add(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Term::Field { base, .. } => base.free_vars_into(out),
        }
    }

    pub fn constants_into(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Term::Const(s) => {
                out.insert(s.clone());
            }
            Term::Var(_) | Term::Int(_) => {}
            Term::Add(a, b) => {
                a.constants_into(out);
                b.constants_into(out);
            }
            Term::Field { base, .. } => base.constants_into(out),
        }
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        match self {
            Term::Var(s) => s.name == name,
            Term::Const(_) | Term::Int(_) => false,
            Term::Add(a, b) => a.mentions_var(name) || b.mentions_var(name),
            Term::Field { base, .. } => base.mentions_var(name),
        }
    }

    pub fn has_field(&self) -> bool {
        match self {
            Term::Field { .. } => true,
            Term::Add(a, b) => a.has_field() || b.has_field(),
            _ => false,
        }
    }

    /// Simultaneous substitution of variables by terms.
    pub fn subst(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(s) => map.get(&s.name).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) | Term::Int(_) => self.clone(),
            Term::Add(a, b) => Term::add(a.subst(map), b.subst(map)),
            Term::Field { index, sort, base } => Term::field(*index, *sort, base.subst(map)),
        }
    }
}

/// Separation-logic formulas. `And`, `Or` and `Sep` are n-ary; build them
/// with [`Formula::and`], [`Formula::or`] and [`Formula::sep`] to keep them
/// flat.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Eq(Term, Term),
    Neq(Term, Term),
    /// Theory atom `t1 < t2`.
    Lt(Term, Term),
    /// Negated theory atom `!(t1 < t2)`.
    NotLt(Term, Term),
    Emp,
    PointsTo(Term, Vec<Term>),
    Pred(String, Vec<Term>),
    Or(Vec<Formula>),
    And(Vec<Formula>),
    Sep(Vec<Formula>),
    Exists(Vec<Symbol>, Box<Formula>),
    Forall(Vec<Symbol>, Box<Formula>),
    /// Only legal inside fold/unfold axioms.
    Implies(Box<Formula>, Box<Formula>),
}

fn flatten(parts: Vec<Formula>, is_same: fn(&Formula) -> Option<&Vec<Formula>>) -> Vec<Formula> {
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match is_same(&p) {
            Some(inner) => out.extend(inner.iter().cloned()),
            None => out.push(p),
        }
    }
    out
}

impl Formula {
    pub fn sep(parts: Vec<Formula>) -> Formula {
        let mut parts = flatten(parts, |f| if let Formula::Sep(v) = f { Some(v) } else { None });
        match parts.len() {
            0 => Formula::Emp,
            1 => parts.pop().unwrap(),
            _ => Formula::Sep(parts),
        }
    }

    /// Panics on an empty conjunction: there is no `true` formula.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut parts = flatten(parts, |f| if let Formula::And(v) = f { Some(v) } else { None });
        assert!(!parts.is_empty(), "empty conjunction");
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        }
    }

    /// Panics on an empty disjunction.
    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut parts = flatten(parts, |f| if let Formula::Or(v) = f { Some(v) } else { None });
        assert!(!parts.is_empty(), "empty disjunction");
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        }
    }

    pub fn exists(vars: Vec<Symbol>, body: Formula) -> Formula {
        if vars.is_empty() {
            return body;
        }
        match body {
            Formula::Exists(mut inner, b) => {
                let mut vs = vars;
                vs.append(&mut inner);
                Formula::Exists(vs, b)
            }
            b => Formula::Exists(vars, Box::new(b)),
        }
    }

    pub fn forall(vars: Vec<Symbol>, body: Formula) -> Formula {
        if vars.is_empty() {
            return body;
        }
        match body {
            Formula::Forall(mut inner, b) => {
                let mut vs = vars;
                vs.append(&mut inner);
                Formula::Forall(vs, b)
            }
            b => Formula::Forall(vars, Box::new(b)),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn pto(base: Term, fields: Vec<Term>) -> Formula {
        Formula::PointsTo(base, fields)
    }

    pub fn pred(name: &str, args: Vec<Term>) -> Formula {
        Formula::Pred(name.to_string(), args)
    }

    pub fn is_pure_atom(&self) -> bool {
        matches!(self, Formula::Eq(..) | Formula::Neq(..) | Formula::Lt(..) | Formula::NotLt(..))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Or(v) | Formula::And(v) | Formula::Sep(v) => v.iter().collect(),
            Formula::Exists(_, b) | Formula::Forall(_, b) => vec![b.as_ref()],
            Formula::Implies(a, b) => vec![a.as_ref(), b.as_ref()],
            _ => vec![],
        }
    }

    /// Visit every term occurring in the formula (not recursing into terms).
    pub fn for_each_term(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Formula::Eq(a, b) | Formula::Neq(a, b) | Formula::Lt(a, b) | Formula::NotLt(a, b) => {
                f(a);
                f(b);
            }
            Formula::Emp => {}
            Formula::PointsTo(t, ts) => {
                f(t);
                ts.iter().for_each(&mut *f);
            }
            Formula::Pred(_, ts) => ts.iter().for_each(&mut *f),
            _ => {
                for c in self.children() {
                    c.for_each_term(f);
                }
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
                let mut inner = BTreeSet::new();
                b.free_vars_into(&mut inner);
                for v in inner {
                    if !vs.iter().any(|w| w.name == v.name) {
                        out.insert(v);
                    }
                }
            }
            Formula::Or(_) | Formula::And(_) | Formula::Sep(_) | Formula::Implies(..) => {
                for c in self.children() {
                    c.free_vars_into(out);
                }
            }
            _ => self.for_each_term(&mut |t| t.free_vars_into(out)),
        }
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| t.constants_into(&mut out));
        out
    }

    pub fn pred_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Pred(p, _) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn any(&self, pred: &impl Fn(&Formula) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn has_field_terms(&self) -> bool {
        let mut found = false;
        self.for_each_term(&mut |t| found |= t.has_field());
        found
    }

    /// Capture-avoiding substitution is not needed: callers only substitute
    /// terms whose variables are disjoint from the bound names (bound names
    /// are renamed apart on parse and all generated names are reserved).
    pub fn subst(&self, map: &BTreeMap<String, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        let s = |t: &Term| t.subst(map);
        match self {
            Formula::Eq(a, b) => Formula::Eq(s(a), s(b)),
            Formula::Neq(a, b) => Formula::Neq(s(a), s(b)),
            Formula::Lt(a, b) => Formula::Lt(s(a), s(b)),
            Formula::NotLt(a, b) => Formula::NotLt(s(a), s(b)),
            Formula::Emp => Formula::Emp,
            Formula::PointsTo(t, ts) => Formula::PointsTo(s(t), ts.iter().map(s).collect()),
            Formula::Pred(p, ts) => Formula::Pred(p.clone(), ts.iter().map(s).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|c| c.subst(map)).collect()),
            Formula::And(v) => Formula::And(v.iter().map(|c| c.subst(map)).collect()),
            Formula::Sep(v) => Formula::Sep(v.iter().map(|c| c.subst(map)).collect()),
            Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(&v.name);
                }
                let body = Box::new(b.subst(&inner));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(vs.clone(), body)
                } else {
                    Formula::Forall(vs.clone(), body)
                }
            }
            Formula::Implies(a, b) => Formula::implies(a.subst(map), b.subst(map)),
        }
    }

    /// Replace free variables by constants of the same name and sort.
    pub fn constify(&self, names: &BTreeSet<String>) -> Formula {
        let map: BTreeMap<String, Term> = self
            .free_vars()
            .into_iter()
            .filter(|v| names.contains(&v.name))
            .map(|v| (v.name.clone(), Term::Const(v)))
            .collect();
        self.subst(&map)
    }
}

/// The record shape shared by all points-to atoms.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecordShape {
    /// Name of the location sort in surface syntax (`node` for `data node {..}`).
    pub type_name: String,
    pub fields: Vec<(String, Sort)>,
}

impl RecordShape {
    pub fn sorts(&self) -> Vec<Sort> {
        self.fields.iter().map(|(_, s)| *s).collect()
    }
    pub fn arity(&self) -> usize {
        self.fields.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    pub shape: RecordShape,
    /// Declared constants, always containing `nil`.
    pub constants: BTreeMap<String, Sort>,
    pub preds: BTreeMap<String, Vec<Sort>>,
}

impl Vocabulary {
    pub fn new(shape: RecordShape) -> Self {
        let mut constants = BTreeMap::new();
        constants.insert(NIL.to_string(), Sort::Loc);
        Vocabulary { shape, constants, preds: BTreeMap::new() }
    }

    /// Declared constants other than `nil`.
    pub fn program_constants(&self) -> impl Iterator<Item = (&String, &Sort)> {
        self.constants.iter().filter(|(n, _)| n.as_str() != NIL)
    }
}

/// `P(x) := exists y. rho_1 \/ ... \/ rho_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredDef {
    pub name: String,
    pub params: Vec<Symbol>,
    pub exists: Vec<Symbol>,
    pub cases: Vec<Formula>,
}

impl PredDef {
    /// The existentials a single case actually mentions, in declaration order.
    pub fn case_exists(&self, j: usize) -> Vec<Symbol> {
        let fv = self.cases[j].free_vars();
        self.exists.iter().filter(|y| fv.contains(y)).cloned().collect()
    }

    pub fn sorts(&self) -> Vec<Sort> {
        self.params.iter().map(|p| p.sort).collect()
    }

    /// Case `j` with parameters and existentials replaced.
    pub fn instantiate(&self, j: usize, args: &[Term], witnesses: &[Term]) -> Formula {
        let mut map = BTreeMap::new();
        for (p, t) in self.params.iter().zip(args) {
            map.insert(p.name.clone(), t.clone());
        }
        for (y, t) in self.exists.iter().zip(witnesses) {
            map.insert(y.name.clone(), t.clone());
        }
        self.cases[j].subst(&map)
    }
}

/// A system of inductive definitions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sid {
    pub defs: BTreeMap<String, PredDef>,
}

impl Sid {
    pub fn get(&self, name: &str) -> Option<&PredDef> {
        self.defs.get(name)
    }
    pub fn insert(&mut self, def: PredDef) {
        self.defs.insert(def.name.clone(), def);
    }
    pub fn iter(&self) -> impl Iterator<Item = &PredDef> {
        self.defs.values()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SortError {
    #[error("sort mismatch: `{term}` has sort {found}, expected {expected}")]
    Mismatch { term: String, found: Sort, expected: Sort },
    #[error("points-to `{0}` has {1} fields but the record shape has {2}")]
    Arity(String, usize, usize),
    #[error("predicate `{0}` applied to {1} arguments, declared with {2}")]
    PredArity(String, usize, usize),
    #[error("undeclared predicate `{0}`")]
    UnknownPred(String),
    #[error("undeclared constant `{0}`")]
    UnknownConst(String),
}

/// Check that every atom is well-sorted with respect to `vocab`.
pub fn check_sorts(vocab: &Vocabulary, f: &Formula) -> Result<(), SortError> {
    let expect = |t: &Term, s: Sort| -> Result<(), SortError> {
        if let Term::Const(c) = t {
            if !vocab.constants.contains_key(&c.name) {
                return Err(SortError::UnknownConst(c.name.clone()));
            }
        }
        if t.sort() != s {
            return Err(SortError::Mismatch { term: format!("{t}"), found: t.sort(), expected: s });
        }
        Ok(())
    };
    match f {
        Formula::Eq(a, b) | Formula::Neq(a, b) => expect(b, a.sort()),
        Formula::Lt(a, b) | Formula::NotLt(a, b) => {
            expect(a, Sort::Int)?;
            expect(b, Sort::Int)
        }
        Formula::Emp => Ok(()),
        Formula::PointsTo(t, ts) => {
            expect(t, Sort::Loc)?;
            if ts.len() != vocab.shape.arity() {
                return Err(SortError::Arity(format!("{f}"), ts.len(), vocab.shape.arity()));
            }
            for (t, (_, s)) in ts.iter().zip(&vocab.shape.fields) {
                expect(t, *s)?;
            }
            Ok(())
        }
        Formula::Pred(p, ts) => {
            let sorts = vocab.preds.get(p).ok_or_else(|| SortError::UnknownPred(p.clone()))?;
            if sorts.len() != ts.len() {
                return Err(SortError::PredArity(p.clone(), ts.len(), sorts.len()));
            }
            for (t, s) in ts.iter().zip(sorts) {
                expect(t, *s)?;
            }
            Ok(())
        }
        _ => f.children().into_iter().try_for_each(|c| check_sorts(vocab, c)),
    }
}

/// A parsed entailment query `Gamma |- psi` together with its vocabulary
/// and definitions.
#[derive(Debug, Clone)]
pub struct Problem {
    pub vocab: Vocabulary,
    pub sid: Sid,
    pub antecedents: Vec<Formula>,
    pub consequent: Formula,
    pub spans: ProblemSpans,
}

impl PartialEq for Problem {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.sid == other.sid
            && self.antecedents == other.antecedents
            && self.consequent == other.consequent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ProblemSpans {
    pub preds: BTreeMap<String, Span>,
    pub antecedents: Vec<Span>,
    pub consequent: Span,
}
