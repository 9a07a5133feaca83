//! Compilation of FO sentences over a symbolic interpretation into LIA.

use super::{idx, NodeRef, SymbolicStructure, IDX};
use crate::encode::fo::{Fo, Rel};
use crate::lia::{Lia, Lin};
use crate::sl::{Sort, Symbol, Term};
use itertools::Itertools;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("symbol `{0}` is not interpreted")]
    Unknown(String),
    #[error("free variable `{0}` in a sentence")]
    FreeVar(String),
    #[error("ill-sorted term `{0}`")]
    Sort(String),
    #[error("compilation exceeded its size or time budget")]
    Budget,
}

/// One possible value of a term: when `guard` holds the term denotes the
/// element `index` of `node`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub guard: Lia,
    pub node: NodeRef,
    pub index: Lin,
}

impl Case {
    pub fn plain(node: NodeRef, index: Lin) -> Case {
        Case { guard: Lia::True, node, index }
    }
}

/// What the compiler needs from a (possibly parametric) symbolic structure.
pub trait Interpretation {
    fn num_nodes(&self) -> usize;
    /// Bound of node `n`, over [`IDX`].
    fn bound(&self, n: usize) -> Lia;
    fn singleton(&self, n: usize) -> Option<i64>;
    fn constant(&self, name: &str, sort: Sort) -> Result<Vec<Case>, CompileError>;
    /// Field `k` on node `n`, with indices over [`IDX`].
    fn field(&self, k: usize, n: usize) -> Result<Vec<Case>, CompileError>;
    /// Relation entry over `i1..ik`.
    fn relation(&self, r: &Rel, nodes: &[NodeRef]) -> Result<Lia, CompileError>;
}

impl Interpretation for SymbolicStructure {
    fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
    fn bound(&self, n: usize) -> Lia {
        self.nodes[n].bound.clone()
    }
    fn singleton(&self, n: usize) -> Option<i64> {
        self.nodes[n].singleton_index()
    }
    fn constant(&self, name: &str, _sort: Sort) -> Result<Vec<Case>, CompileError> {
        let (n, z) = self.constants.get(name).ok_or_else(|| CompileError::Unknown(name.to_string()))?;
        Ok(vec![Case::plain(*n, Lin::cst(*z))])
    }
    fn field(&self, k: usize, n: usize) -> Result<Vec<Case>, CompileError> {
        let e = self
            .fields
            .get(k)
            .and_then(|c| c.get(n))
            .ok_or_else(|| CompileError::Unknown(format!("m_{}", k + 1)))?;
        Ok(vec![Case::plain(e.target, e.term.clone())])
    }
    fn relation(&self, r: &Rel, nodes: &[NodeRef]) -> Result<Lia, CompileError> {
        Ok(self.relations.get(r).and_then(|m| m.get(nodes)).cloned().unwrap_or(Lia::False))
    }
}

struct Compiler<'a, I: Interpretation + ?Sized> {
    interp: &'a I,
    fresh: usize,
    /// Range quantifiers over indices `0..window` (integers over
    /// `-window..=window`) instead of compiling them.
    window: Option<i64>,
    steps: usize,
    max_steps: usize,
    deadline: Option<Instant>,
}

type Env = Vec<(String, (NodeRef, Lin))>;

fn at(l: &Lin, e: &Lin) -> Lin {
    l.subst(&BTreeMap::from([(IDX.to_string(), e.clone())]))
}

impl<I: Interpretation + ?Sized> Compiler<'_, I> {
    fn fresh(&mut self) -> String {
        self.fresh += 1;
        format!("_q{}", self.fresh)
    }

    fn term(&mut self, t: &Term, env: &Env) -> Result<Vec<Case>, CompileError> {
        match t {
            Term::Var(s) => env
                .iter()
                .rev()
                .find(|(n, _)| *n == s.name)
                .map(|(_, (n, l))| vec![Case::plain(*n, l.clone())])
                .ok_or_else(|| CompileError::FreeVar(s.name.clone())),
            Term::Const(s) => self.interp.constant(&s.name, s.sort),
            Term::Int(n) => Ok(vec![Case::plain(NodeRef::Int, Lin::cst(*n))]),
            Term::Add(a, b) => {
                let ca = self.term(a, env)?;
                let cb = self.term(b, env)?;
                let mut out = vec![];
                for (x, y) in ca.iter().cartesian_product(cb.iter()) {
                    if x.node != NodeRef::Int || y.node != NodeRef::Int {
                        return Err(CompileError::Sort(t.to_string()));
                    }
                    out.push(Case {
                        guard: Lia::and(vec![x.guard.clone(), y.guard.clone()]),
                        node: NodeRef::Int,
                        index: x.index.add(&y.index),
                    });
                }
                Ok(out)
            }
            Term::Field { index, base, .. } => {
                let cb = self.term(base, env)?;
                let mut out = vec![];
                for c in cb {
                    let NodeRef::Loc(n) = c.node else {
                        return Err(CompileError::Sort(t.to_string()));
                    };
                    for f in self.interp.field(*index, n)? {
                        let guard = Lia::and(vec![c.guard.clone(), f.guard.subst(&idx_map(&c.index))]);
                        if guard == Lia::False {
                            continue;
                        }
                        out.push(Case { guard, node: f.node, index: at(&f.index, &c.index) });
                    }
                }
                Ok(out)
            }
        }
    }

    fn tick(&mut self) -> Result<(), CompileError> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(CompileError::Budget);
        }
        if self.steps % 1024 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(CompileError::Budget);
        }
        Ok(())
    }

    fn formula(&mut self, f: &Fo, env: &mut Env) -> Result<Lia, CompileError> {
        self.tick()?;
        Ok(match f {
            Fo::True => Lia::True,
            Fo::False => Lia::False,
            Fo::Eq(a, b) => {
                let ca = self.term(a, env)?;
                let cb = self.term(b, env)?;
                let mut alts = vec![];
                for (x, y) in ca.iter().cartesian_product(cb.iter()) {
                    if x.node != y.node {
                        continue;
                    }
                    alts.push(Lia::and(vec![x.guard.clone(), y.guard.clone(), Lia::eq(&x.index, &y.index)]));
                }
                Lia::or(alts)
            }
            Fo::Lt(a, b) => {
                let ca = self.term(a, env)?;
                let cb = self.term(b, env)?;
                let mut alts = vec![];
                for (x, y) in ca.iter().cartesian_product(cb.iter()) {
                    if x.node != NodeRef::Int || y.node != NodeRef::Int {
                        return Err(CompileError::Sort(f_string(f)));
                    }
                    alts.push(Lia::and(vec![x.guard.clone(), y.guard.clone(), Lia::lt(&x.index, &y.index)]));
                }
                Lia::or(alts)
            }
            Fo::Rel(r, args) => {
                let cases = args.iter().map(|a| self.term(a, env)).collect::<Result<Vec<_>, _>>()?;
                let mut alts = vec![];
                let combos: Vec<Vec<&Case>> = if cases.is_empty() {
                    vec![vec![]]
                } else {
                    cases.iter().map(|c| c.iter()).multi_cartesian_product().collect()
                };
                for combo in combos {
                    let nodes: Vec<NodeRef> = combo.iter().map(|c| c.node).collect();
                    let entry = self.interp.relation(r, &nodes)?;
                    let map: BTreeMap<String, Lin> =
                        combo.iter().enumerate().map(|(j, c)| (idx(j + 1), c.index.clone())).collect();
                    let mut parts: Vec<Lia> = combo.iter().map(|c| c.guard.clone()).collect();
                    parts.push(entry.subst(&map));
                    alts.push(Lia::and(parts));
                }
                Lia::or(alts)
            }
            Fo::Not(a) => Lia::not(self.formula(a, env)?),
            Fo::And(v) => {
                let mut out = vec![];
                for c in v {
                    let x = self.formula(c, env)?;
                    if x == Lia::False {
                        return Ok(Lia::False);
                    }
                    out.push(x);
                }
                Lia::and(out)
            }
            Fo::Or(v) => {
                let mut out = vec![];
                for c in v {
                    let x = self.formula(c, env)?;
                    if x == Lia::True {
                        return Ok(Lia::True);
                    }
                    out.push(x);
                }
                Lia::or(out)
            }
            Fo::Implies(a, b) => {
                let x = self.formula(a, env)?;
                if x == Lia::False {
                    return Ok(Lia::True);
                }
                Lia::implies(x, self.formula(b, env)?)
            }
            Fo::Iff(a, b) => {
                let x = self.formula(a, env)?;
                let y = self.formula(b, env)?;
                Lia::iff(x, y)
            }
            Fo::Forall(vs, b) => self.quant(true, vs, b, env)?,
            Fo::Exists(vs, b) => self.quant(false, vs, b, env)?,
        })
    }

    fn quant(&mut self, univ: bool, vs: &[Symbol], body: &Fo, env: &mut Env) -> Result<Lia, CompileError> {
        let Some((v, rest)) = vs.split_first() else {
            return self.formula(body, env);
        };
        let mut parts = vec![];
        match v.sort {
            Sort::Int if self.window.is_some() => {
                let w = self.window.unwrap();
                for z in -w..=w {
                    env.push((v.name.clone(), (NodeRef::Int, Lin::cst(z))));
                    let b = self.quant(univ, rest, body, env);
                    env.pop();
                    parts.push(b?);
                }
            }
            Sort::Int => {
                let q = self.fresh();
                env.push((v.name.clone(), (NodeRef::Int, Lin::var(&q))));
                let b = self.quant(univ, rest, body, env);
                env.pop();
                let b = b?;
                return Ok(if univ { Lia::forall(vec![q], b) } else { Lia::exists(vec![q], b) });
            }
            Sort::Loc => {
                for n in 0..self.interp.num_nodes() {
                    if let Some(z) = self.interp.singleton(n) {
                        env.push((v.name.clone(), (NodeRef::Loc(n), Lin::cst(z))));
                        let b = self.quant(univ, rest, body, env);
                        env.pop();
                        parts.push(b?);
                    } else if let Some(w) = self.window {
                        let bound = self.interp.bound(n);
                        for z in 0..w {
                            let env_z = BTreeMap::from([(IDX.to_string(), z)]);
                            if bound.eval(&env_z, &BTreeMap::new()) != Some(true) {
                                continue;
                            }
                            env.push((v.name.clone(), (NodeRef::Loc(n), Lin::cst(z))));
                            let b = self.quant(univ, rest, body, env);
                            env.pop();
                            parts.push(b?);
                        }
                    } else {
                        let q = self.fresh();
                        env.push((v.name.clone(), (NodeRef::Loc(n), Lin::var(&q))));
                        let b = self.quant(univ, rest, body, env);
                        env.pop();
                        let guard = self.interp.bound(n).subst(&idx_map(&Lin::var(&q)));
                        parts.push(if univ {
                            Lia::forall(vec![q], Lia::implies(guard, b?))
                        } else {
                            Lia::exists(vec![q], Lia::and(vec![guard, b?]))
                        });
                    }
                    let last = parts.last().unwrap();
                    if univ && *last == Lia::False {
                        return Ok(Lia::False);
                    }
                    if !univ && *last == Lia::True {
                        return Ok(Lia::True);
                    }
                }
            }
        }
        Ok(if univ { Lia::and(parts) } else { Lia::or(parts) })
    }
}

fn idx_map(e: &Lin) -> BTreeMap<String, Lin> {
    BTreeMap::from([(IDX.to_string(), e.clone())])
}

fn f_string(f: &Fo) -> String {
    format!("{f:?}")
}

/// LIA sentence equivalent to `sentence` in the explication of `interp`.
/// Free integer variables of the result are the interpretation's
/// parameters, if any.
pub fn compile_sentence<I: Interpretation + ?Sized>(interp: &I, sentence: &Fo) -> Result<Lia, CompileError> {
    let mut c = Compiler { interp, fresh: 0, window: None, steps: 0, max_steps: usize::MAX, deadline: None };
    c.formula(sentence, &mut vec![])
}

/// Quantifier-free under-approximation used for parameter search: location
/// quantifiers over non-singleton nodes range over indices `0..window` only.
/// Exact only when every such node lies inside the window. Fails with
/// [`CompileError::Budget`] after `max_steps` formula nodes or at `deadline`.
pub fn compile_windowed<I: Interpretation + ?Sized>(
    interp: &I,
    sentence: &Fo,
    window: i64,
    max_steps: usize,
    deadline: Option<Instant>,
) -> Result<Lia, CompileError> {
    let mut c = Compiler { interp, fresh: 0, window: Some(window), steps: 0, max_steps, deadline };
    c.formula(sentence, &mut vec![])
}
