//! Symbolic structures: finitely many nodes, each standing for the integer
//! solutions of a bound formula, with interpretations given by linear terms
//! and quantifier-free LIA formulas. Model checking compiles a first-order
//! sentence to quantified LIA.

mod compile;
mod serial;
pub mod template;

pub use compile::{compile_sentence, compile_windowed, Case, CompileError, Interpretation};
pub use serial::{from_json, render_dot, to_json, StructureJson};
pub use template::{certifies, find_model, FoundModel, Template, TemplateSpec};

use crate::encode::fo::{Fo, Rel};
use crate::lia::{self, Cmp, Lia, LiaError, Lin};
use crate::semantics::{FoStructure, IntSlice, Value};
use crate::sl::{Sort, NIL};
use crate::solver::Solver;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;
use thiserror::Error;

/// Name of the index variable in bounds and field terms.
pub const IDX: &str = "i";

/// Name of the `k`-th (1-based) index variable in relation formulas.
pub fn idx(k: usize) -> String {
    format!("i{k}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Loc(usize),
    Int,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    /// Quantifier-free, over [`IDX`].
    pub bound: Lia,
}

impl Node {
    pub fn singleton(name: &str, c: i64) -> Node {
        Node { name: name.to_string(), bound: Lia::eq(&Lin::var(IDX), &Lin::cst(c)) }
    }
    pub fn ray(name: &str, from: i64) -> Node {
        Node { name: name.to_string(), bound: Lia::ge(&Lin::var(IDX), &Lin::cst(from)) }
    }
    /// `Some(c)` when the bound is syntactically `i = c`.
    pub fn singleton_index(&self) -> Option<i64> {
        singleton_index(&self.bound)
    }
}

pub(crate) fn singleton_index(b: &Lia) -> Option<i64> {
    match b {
        Lia::Atom(l, Cmp::Eq) if l.coeffs.len() == 1 => match l.coeffs.get(IDX) {
            Some(1) => Some(-l.konst),
            Some(-1) => Some(l.konst),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldEntry {
    pub target: NodeRef,
    /// Over [`IDX`].
    pub term: Lin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicStructure {
    pub nodes: Vec<Node>,
    pub null: usize,
    pub field_sorts: Vec<Sort>,
    pub constants: BTreeMap<String, (NodeRef, i64)>,
    /// `fields[k][n]` interprets field `k` on node `n`.
    pub fields: Vec<Vec<FieldEntry>>,
    /// Missing tuples are empty. Formulas range over `i1..ik`.
    pub relations: BTreeMap<Rel, BTreeMap<Vec<NodeRef>, Lia>>,
}

#[derive(Debug, Error)]
pub enum SymbolicError {
    #[error("invalid symbolic structure: {0}")]
    Invalid(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Lia(#[from] LiaError),
}

impl SymbolicStructure {
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }
    pub fn node_name(&self, r: NodeRef) -> &str {
        match r {
            NodeRef::Loc(n) => &self.nodes[n].name,
            NodeRef::Int => "int",
        }
    }
    pub fn is_finite_node_syntactically(&self, n: usize) -> bool {
        self.nodes[n].singleton_index().is_some()
    }
}

/// Checks that need no solver: references, sorts, arities, variable use.
fn check_shape(s: &SymbolicStructure) -> Result<(), String> {
    let k = s.nodes.len();
    if k == 0 {
        return Err("no location nodes".into());
    }
    if s.null >= k {
        return Err("null node out of range".into());
    }
    let mut names = BTreeSet::new();
    for n in &s.nodes {
        if n.name == "int" || !names.insert(n.name.as_str()) {
            return Err(format!("duplicate or reserved node name `{}`", n.name));
        }
        if !n.bound.is_quantifier_free() {
            return Err(format!("bound of `{}` is not quantifier-free", n.name));
        }
        if let Some(v) = n.bound.free_int_vars().into_iter().find(|v| v != IDX) {
            return Err(format!("bound of `{}` mentions `{v}`", n.name));
        }
    }
    if s.nodes[s.null].singleton_index().is_none() {
        return Err(format!("null node `{}` is not a singleton", s.nodes[s.null].name));
    }
    match s.constants.get(NIL) {
        Some((NodeRef::Loc(n), _)) if *n == s.null => {}
        _ => return Err("`nil` must be interpreted in the null node".into()),
    }
    let ok_ref = |r: &NodeRef| match r {
        NodeRef::Loc(n) => *n < k,
        NodeRef::Int => true,
    };
    for (c, (r, v)) in &s.constants {
        if !ok_ref(r) {
            return Err(format!("constant `{c}` refers to a missing node"));
        }
        if let NodeRef::Loc(n) = r {
            let env = BTreeMap::from([(IDX.to_string(), *v)]);
            if s.nodes[*n].bound.eval(&env, &BTreeMap::new()) != Some(true) {
                return Err(format!("constant `{c}` has index {v} outside the bound of `{}`", s.nodes[*n].name));
            }
        }
    }
    if s.fields.len() != s.field_sorts.len() {
        return Err(format!("{} field interpretations for {} fields", s.fields.len(), s.field_sorts.len()));
    }
    for (fk, col) in s.fields.iter().enumerate() {
        if col.len() != k {
            return Err(format!("field m_{} is not interpreted on every node", fk + 1));
        }
        for (n, e) in col.iter().enumerate() {
            if !ok_ref(&e.target) {
                return Err(format!("field m_{} on `{}` targets a missing node", fk + 1, s.nodes[n].name));
            }
            let want_int = s.field_sorts[fk] == Sort::Int;
            if want_int != (e.target == NodeRef::Int) {
                return Err(format!("field m_{} on `{}` has the wrong sort", fk + 1, s.nodes[n].name));
            }
            if let Some(v) = e.term.vars().find(|v| *v != IDX) {
                return Err(format!("field m_{} on `{}` mentions `{v}`", fk + 1, s.nodes[n].name));
            }
        }
    }
    for (r, entries) in &s.relations {
        for (tuple, f) in entries {
            if !tuple.iter().all(ok_ref) {
                return Err(format!("{} has an entry over a missing node", r.name()));
            }
            if !f.is_quantifier_free() {
                return Err(format!("{} entry is not quantifier-free", r.name()));
            }
            let allowed: BTreeSet<String> = (1..=tuple.len()).map(idx).collect();
            if let Some(v) = f.free_int_vars().into_iter().find(|v| !allowed.contains(v)) {
                return Err(format!("{} entry mentions `{v}`", r.name()));
            }
            let mut bs = BTreeSet::new();
            f.bool_vars(&mut bs);
            if let Some(b) = bs.into_iter().next() {
                return Err(format!("{} entry mentions Boolean `{b}`", r.name()));
            }
        }
    }
    Ok(())
}

fn bound_at(s: &SymbolicStructure, n: usize, at: &Lin) -> Lia {
    s.nodes[n].bound.subst(&BTreeMap::from([(IDX.to_string(), at.clone())]))
}

/// The structure invariants: satisfiable bounds, constants inside their
/// bounds, and closure of every field term. Reports the first failure.
pub fn validate_structure(s: &SymbolicStructure, solver: &Solver, timeout: Duration) -> Result<(), SymbolicError> {
    check_shape(s).map_err(SymbolicError::Invalid)?;
    let q = Lin::var("_v");
    let mut checks: Vec<(String, Lia)> = vec![];
    for (n, node) in s.nodes.iter().enumerate() {
        checks.push((
            format!("bound of `{}` is unsatisfiable", node.name),
            Lia::exists(vec!["_v".into()], bound_at(s, n, &q)),
        ));
    }
    for (fk, col) in s.fields.iter().enumerate() {
        for (n, e) in col.iter().enumerate() {
            if let NodeRef::Loc(t) = e.target {
                let at = e.term.subst(&BTreeMap::from([(IDX.to_string(), q.clone())]));
                checks.push((
                    format!("field m_{} maps `{}` outside the bound of `{}`", fk + 1, s.nodes[n].name, s.nodes[t].name),
                    Lia::forall(vec!["_v".into()], Lia::implies(bound_at(s, n, &q), bound_at(s, t, &at))),
                ));
            }
        }
    }
    let all = Lia::and(checks.iter().map(|c| c.1.clone()).collect());
    if lia::decide(solver, &all, timeout)? {
        return Ok(());
    }
    for (msg, f) in checks {
        if !lia::decide(solver, &f, timeout)? {
            return Err(SymbolicError::Invalid(msg));
        }
    }
    Err(SymbolicError::Invalid("structure invariants fail jointly".into()))
}

/// Truth of a closed FO sentence in the explication of `s`.
pub fn model_check(s: &SymbolicStructure, sentence: &Fo, solver: &Solver, timeout: Duration) -> Result<bool, SymbolicError> {
    let f = compile_sentence(s, sentence)?;
    Ok(lia::decide(solver, &f, timeout)?)
}

/// Nodes whose bound has infinitely many solutions.
pub fn infinite_nodes(s: &SymbolicStructure, solver: &Solver, timeout: Duration) -> Result<Vec<usize>, SymbolicError> {
    let mut out = vec![];
    for (n, node) in s.nodes.iter().enumerate() {
        if node.singleton_index().is_some() {
            continue;
        }
        // forall b. exists i. B(i) /\ (i >= b \/ -i >= b)
        let b = Lin::var("_b");
        let v = Lin::var("_v");
        let big = Lia::or(vec![Lia::ge(&v, &b), Lia::ge(&v.scale(-1), &b)]);
        let f = Lia::forall(
            vec!["_b".into()],
            Lia::exists(vec!["_v".into()], Lia::and(vec![bound_at(s, n, &v), big])),
        );
        if lia::decide(solver, &f, timeout)? {
            out.push(n);
        }
    }
    Ok(out)
}

pub fn has_infinite_domain(s: &SymbolicStructure, solver: &Solver, timeout: Duration) -> Result<bool, SymbolicError> {
    Ok(!infinite_nodes(s, solver, timeout)?.is_empty())
}

/// Explicit finite structure for a symbolic structure whose location nodes
/// all have solutions inside `window`. Location 0 is `nil`; the returned
/// list maps locations back to `(node, index)`.
pub fn explicate(s: &SymbolicStructure, window: (i64, i64)) -> Result<(FoStructure, Vec<(usize, i64)>), SymbolicError> {
    check_shape(s).map_err(SymbolicError::Invalid)?;
    if s.field_sorts.contains(&Sort::Int) || s.constants.values().any(|(r, _)| *r == NodeRef::Int) {
        return Err(SymbolicError::Invalid("explication supports location sorts only".into()));
    }
    let (_, nil_idx) = s.constants[NIL];
    let mut elems = vec![(s.null, nil_idx)];
    for (n, node) in s.nodes.iter().enumerate() {
        for z in window.0..=window.1 {
            let env = BTreeMap::from([(IDX.to_string(), z)]);
            if node.bound.eval(&env, &BTreeMap::new()) == Some(true) && (n, z) != (s.null, nil_idx) {
                elems.push((n, z));
            }
        }
    }
    let pos: BTreeMap<(usize, i64), u32> = elems.iter().enumerate().map(|(i, e)| (*e, i as u32)).collect();
    let loc = |n: NodeRef, z: i64| -> Result<Value, SymbolicError> {
        match n {
            NodeRef::Loc(n) => pos
                .get(&(n, z))
                .map(|l| Value::Loc(*l))
                .ok_or_else(|| SymbolicError::Invalid(format!("element ({}, {z}) lies outside the window", s.nodes[n].name))),
            NodeRef::Int => Ok(Value::Int(z)),
        }
    };
    let mut fields = vec![];
    for col in &s.fields {
        let mut vals = vec![];
        for (n, z) in &elems {
            let e = &col[*n];
            let t = e.term.eval(&BTreeMap::from([(IDX.to_string(), *z)])).expect("closed term");
            vals.push(loc(e.target, t)?);
        }
        fields.push(vals);
    }
    let mut constants = BTreeMap::new();
    for (c, (n, z)) in &s.constants {
        constants.insert(c.clone(), loc(*n, *z)?);
    }
    let mut relations = BTreeMap::new();
    for (r, entries) in &s.relations {
        let mut set = BTreeSet::new();
        for (tuple, f) in entries {
            let choices: Vec<Vec<(u32, i64)>> = tuple
                .iter()
                .map(|t| match t {
                    NodeRef::Loc(n) => elems
                        .iter()
                        .enumerate()
                        .filter(|(_, (m, _))| m == n)
                        .map(|(l, (_, z))| (l as u32, *z))
                        .collect(),
                    NodeRef::Int => vec![],
                })
                .collect();
            for combo in itertools::Itertools::multi_cartesian_product(choices.into_iter()) {
                let env: BTreeMap<String, i64> = combo.iter().enumerate().map(|(j, (_, z))| (idx(j + 1), *z)).collect();
                if f.eval(&env, &BTreeMap::new()) == Some(true) {
                    set.insert(combo.iter().map(|(l, _)| Value::Loc(*l)).collect::<Vec<_>>());
                }
            }
            if tuple.is_empty() && f.eval(&BTreeMap::new(), &BTreeMap::new()) == Some(true) {
                set.insert(vec![]);
            }
        }
        relations.insert(r.clone(), set);
    }
    let fo = FoStructure {
        num_locs: elems.len() as u32,
        ints: IntSlice::default(),
        constants,
        field_sorts: s.field_sorts.clone(),
        fields,
        relations,
    };
    Ok((fo, elems))
}

/// Replace relation entries that are empty on their nodes by nothing and
/// entries that hold everywhere on their nodes by `true`. The explication
/// is unchanged.
pub fn simplify_relations(s: &mut SymbolicStructure, solver: &Solver, timeout: Duration) -> Result<(), SymbolicError> {
    let mut keys = vec![];
    let mut queries = vec![];
    for (r, entries) in &s.relations {
        for (tuple, f) in entries {
            if matches!(f, Lia::True | Lia::False) {
                continue;
            }
            let bounds: Vec<Lia> = tuple
                .iter()
                .enumerate()
                .filter_map(|(j, n)| match n {
                    NodeRef::Loc(n) => Some(bound_at(s, *n, &Lin::var(&idx(j + 1)))),
                    NodeRef::Int => None,
                })
                .collect();
            let b = Lia::and(bounds);
            queries.push(Lia::and(vec![b.clone(), f.clone()]));
            queries.push(Lia::and(vec![b, Lia::not(f.clone())]));
            keys.push((r.clone(), tuple.clone()));
        }
    }
    let res = lia::solve_batch(solver, &queries, timeout)?;
    for (k, (r, tuple)) in keys.into_iter().enumerate() {
        let m = s.relations.get_mut(&r).expect("key from map");
        if res[2 * k] == Some(false) {
            m.remove(&tuple);
        } else if res[2 * k + 1] == Some(false) {
            m.insert(tuple, Lia::True);
        }
    }
    Ok(())
}
