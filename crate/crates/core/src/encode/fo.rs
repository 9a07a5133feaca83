//! Many-sorted first-order formulas over the encoding vocabulary: field
//! functions `m_i`, relations `P_fo` / `P_eta`, and linear integer
//! arithmetic. Terms are shared with the separation-logic syntax.

use crate::sl::{Sort, Symbol, Term};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelKind {
    /// `P_fo(x)`: the tuple has some heaplet.
    Fo,
    /// `P_eta(x, l)`: `l` belongs to the tuple's heaplet.
    Eta,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rel {
    pub pred: String,
    pub kind: RelKind,
}

impl Rel {
    pub fn fo(pred: &str) -> Rel {
        Rel { pred: pred.to_string(), kind: RelKind::Fo }
    }
    pub fn eta(pred: &str) -> Rel {
        Rel { pred: pred.to_string(), kind: RelKind::Eta }
    }
    /// Solver-level name, e.g. `lseg_fo`.
    pub fn name(&self) -> String {
        match self.kind {
            RelKind::Fo => format!("{}_fo", self.pred),
            RelKind::Eta => format!("{}_eta", self.pred),
        }
    }
    pub fn parse(name: &str) -> Option<Rel> {
        if let Some(p) = name.strip_suffix("_fo") {
            Some(Rel::fo(p))
        } else {
            name.strip_suffix("_eta").map(Rel::eta)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fo {
    True,
    False,
    Eq(Term, Term),
    Lt(Term, Term),
    Rel(Rel, Vec<Term>),
    Not(Box<Fo>),
    And(Vec<Fo>),
    Or(Vec<Fo>),
    Implies(Box<Fo>, Box<Fo>),
    Iff(Box<Fo>, Box<Fo>),
    Forall(Vec<Symbol>, Box<Fo>),
    Exists(Vec<Symbol>, Box<Fo>),
}

/// The heaplet variable `x*`.
pub fn xstar() -> Symbol {
    Symbol::loc("_xs")
}

impl Fo {
    pub fn eq(a: Term, b: Term) -> Fo {
        if a == b {
            Fo::True
        } else {
            Fo::Eq(a, b)
        }
    }

    pub fn neq(a: Term, b: Term) -> Fo {
        Fo::not(Fo::eq(a, b))
    }

    pub fn not(f: Fo) -> Fo {
        match f {
            Fo::True => Fo::False,
            Fo::False => Fo::True,
            Fo::Not(g) => *g,
            g => Fo::Not(Box::new(g)),
        }
    }

    pub fn and(parts: Vec<Fo>) -> Fo {
        let mut out = vec![];
        for p in parts {
            match p {
                Fo::True => {}
                Fo::False => return Fo::False,
                Fo::And(v) => out.extend(v),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Fo::True,
            1 => out.pop().unwrap(),
            _ => Fo::And(out),
        }
    }

    pub fn or(parts: Vec<Fo>) -> Fo {
        let mut out = vec![];
        for p in parts {
            match p {
                Fo::False => {}
                Fo::True => return Fo::True,
                Fo::Or(v) => out.extend(v),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Fo::False,
            1 => out.pop().unwrap(),
            _ => Fo::Or(out),
        }
    }

    pub fn implies(a: Fo, b: Fo) -> Fo {
        match (a, b) {
            (Fo::False, _) | (_, Fo::True) => Fo::True,
            (Fo::True, b) => b,
            (a, Fo::False) => Fo::not(a),
            (a, b) => Fo::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Fo, b: Fo) -> Fo {
        match (a, b) {
            (Fo::True, b) | (b, Fo::True) => b,
            (Fo::False, b) | (b, Fo::False) => Fo::not(b),
            (a, b) if a == b => Fo::True,
            (a, b) => Fo::Iff(Box::new(a), Box::new(b)),
        }
    }

    /// Drops binders that do not occur in the body (domains are non-empty).
    pub fn forall(vars: Vec<Symbol>, body: Fo) -> Fo {
        let fv = body.free_vars();
        let vars: Vec<Symbol> = vars.into_iter().filter(|v| fv.contains(v)).collect();
        if vars.is_empty() {
            body
        } else {
            Fo::Forall(vars, Box::new(body))
        }
    }

    pub fn exists(vars: Vec<Symbol>, body: Fo) -> Fo {
        let fv = body.free_vars();
        let vars: Vec<Symbol> = vars.into_iter().filter(|v| fv.contains(v)).collect();
        if vars.is_empty() {
            body
        } else {
            Fo::Exists(vars, Box::new(body))
        }
    }

    pub fn rel(r: Rel, args: Vec<Term>) -> Fo {
        Fo::Rel(r, args)
    }

    pub fn children(&self) -> Vec<&Fo> {
        match self {
            Fo::Not(a) | Fo::Forall(_, a) | Fo::Exists(_, a) => vec![a],
            Fo::And(v) | Fo::Or(v) => v.iter().collect(),
            Fo::Implies(a, b) | Fo::Iff(a, b) => vec![a, b],
            _ => vec![],
        }
    }

    pub fn for_each_term(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Fo::Eq(a, b) | Fo::Lt(a, b) => {
                f(a);
                f(b);
            }
            Fo::Rel(_, ts) => ts.iter().for_each(&mut *f),
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
            Fo::Forall(vs, b) | Fo::Exists(vs, b) => {
                for v in b.free_vars() {
                    if !vs.contains(&v) {
                        out.insert(v);
                    }
                }
            }
            Fo::Eq(..) | Fo::Lt(..) | Fo::Rel(..) => self.for_each_term(&mut |t| t.free_vars_into(out)),
            _ => {
                for c in self.children() {
                    c.free_vars_into(out);
                }
            }
        }
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| t.constants_into(&mut out));
        out
    }

    pub fn relations(&self, out: &mut BTreeSet<Rel>) {
        if let Fo::Rel(r, _) = self {
            out.insert(r.clone());
        }
        for c in self.children() {
            c.relations(out);
        }
    }

    /// Substitution of free variables. Bound names introduced by the encoder
    /// are globally fresh, so no capture can occur.
    pub fn subst(&self, map: &BTreeMap<String, Term>) -> Fo {
        if map.is_empty() {
            return self.clone();
        }
        let s = |t: &Term| t.subst(map);
        match self {
            Fo::True | Fo::False => self.clone(),
            Fo::Eq(a, b) => Fo::eq(s(a), s(b)),
            Fo::Lt(a, b) => Fo::Lt(s(a), s(b)),
            Fo::Rel(r, ts) => Fo::Rel(r.clone(), ts.iter().map(s).collect()),
            Fo::Not(a) => Fo::not(a.subst(map)),
            Fo::And(v) => Fo::and(v.iter().map(|c| c.subst(map)).collect()),
            Fo::Or(v) => Fo::or(v.iter().map(|c| c.subst(map)).collect()),
            Fo::Implies(a, b) => Fo::implies(a.subst(map), b.subst(map)),
            Fo::Iff(a, b) => Fo::iff(a.subst(map), b.subst(map)),
            Fo::Forall(vs, b) | Fo::Exists(vs, b) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(&v.name);
                }
                let body = b.subst(&inner);
                if matches!(self, Fo::Forall(..)) {
                    Fo::forall(vs.clone(), body)
                } else {
                    Fo::exists(vs.clone(), body)
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn has_int_quantifier(&self) -> bool {
        match self {
            Fo::Forall(vs, b) | Fo::Exists(vs, b) => vs.iter().any(|v| v.sort == Sort::Int) || b.has_int_quantifier(),
            _ => self.children().iter().any(|c| c.has_int_quantifier()),
        }
    }
}
