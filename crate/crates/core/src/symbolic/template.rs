//! Parametric symbolic structures and template-based model finding.
//!
//! A template fixes the nodes: one singleton per class of location
//! constants (the class of `nil` is the null node), `extra` unnamed
//! singletons and `rays` nodes bounded by `i >= 0`. Field targets, index
//! offsets and relation formulas are left as integer and Boolean
//! parameters, and the compiled obligation is handed to the solver.

use super::compile::{compile_sentence, compile_windowed, Case, CompileError, Interpretation};
use super::{idx, model_check, simplify_relations, validate_structure, FieldEntry, Node, NodeRef, SymbolicError, SymbolicStructure, IDX};
use crate::encode::fo::{Fo, Rel};
use crate::encode::Obligation;
use crate::lia::{self, Assignment, Lia, Lin};
use crate::sl::{Sort, Term, NIL};
use crate::solver::Solver;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

/// Shape of a template: number of ray nodes, extra singleton nodes, and
/// disjuncts per relation entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TemplateSpec {
    pub rays: usize,
    pub extra: usize,
    pub clauses: usize,
}

impl TemplateSpec {
    pub const fn new(rays: usize, extra: usize, clauses: usize) -> Self {
        TemplateSpec { rays, extra, clauses }
    }

    /// The search order used when no template is given.
    pub fn default_family() -> Vec<TemplateSpec> {
        vec![
            TemplateSpec::new(1, 0, 1),
            TemplateSpec::new(1, 1, 1),
            TemplateSpec::new(2, 0, 1),
            TemplateSpec::new(1, 0, 2),
            TemplateSpec::new(2, 1, 1),
            TemplateSpec::new(2, 0, 2),
        ]
    }
}

impl fmt::Display for TemplateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.rays, self.extra, self.clauses)
    }
}

impl FromStr for TemplateSpec {
    type Err = String;
    /// `RAYS[:EXTRA[:CLAUSES]]`.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.is_empty() || parts.len() > 3 {
            return Err(format!("bad template `{s}`; expected RAYS[:EXTRA[:CLAUSES]]"));
        }
        let num = |i: usize, d: usize| -> Result<usize, String> {
            match parts.get(i) {
                None => Ok(d),
                Some(p) => p.trim().parse().map_err(|_| format!("bad template `{s}`")),
            }
        };
        let t = TemplateSpec::new(num(0, 1)?, num(1, 0)?, num(2, 1)?);
        if t.clauses == 0 {
            return Err(format!("bad template `{s}`: at least one clause"));
        }
        Ok(t)
    }
}

#[derive(Debug, Default)]
struct Params {
    /// Integer parameters with optional lower and upper bounds.
    ints: BTreeMap<String, (Option<i64>, Option<i64>)>,
    entries: BTreeMap<(Rel, Vec<NodeRef>), Lia>,
}

/// A skeleton whose interpretations are parametric.
#[derive(Debug)]
pub struct Template {
    pub spec: TemplateSpec,
    pub nodes: Vec<Node>,
    pub null: usize,
    pub field_sorts: Vec<Sort>,
    /// Node of each location constant.
    pub placement: BTreeMap<String, usize>,
    params: RefCell<Params>,
}

fn tag(nodes: &[NodeRef]) -> String {
    nodes
        .iter()
        .map(|n| match n {
            NodeRef::Loc(n) => n.to_string(),
            NodeRef::Int => "I".to_string(),
        })
        .collect::<Vec<_>>()
        .join("_")
}

impl Template {
    /// `blocks` partitions the location constants; the block holding `nil`
    /// becomes the null node.
    pub fn new(spec: TemplateSpec, field_sorts: &[Sort], blocks: &[Vec<String>]) -> Template {
        let mut nodes = vec![];
        let mut placement = BTreeMap::new();
        let mut null = 0;
        for b in blocks {
            let n = nodes.len();
            if b.iter().any(|c| c == NIL) {
                null = n;
            }
            let name = if b.iter().any(|c| c == NIL) { "nil".to_string() } else { format!("n_{}", b[0]) };
            nodes.push(Node::singleton(&name, 0));
            for c in b {
                placement.insert(c.clone(), n);
            }
        }
        for e in 0..spec.extra {
            nodes.push(Node::singleton(&format!("s{e}"), 0));
        }
        for r in 0..spec.rays {
            nodes.push(Node::ray(&format!("r{r}"), 0));
        }
        Template {
            spec,
            nodes,
            null,
            field_sorts: field_sorts.to_vec(),
            placement,
            params: RefCell::new(Params::default()),
        }
    }

    fn int_param(&self, name: String, lo: Option<i64>, hi: Option<i64>) -> Lin {
        self.params.borrow_mut().ints.insert(name.clone(), (lo, hi));
        Lin::var(&name)
    }

    fn is_ray(&self, n: usize) -> bool {
        self.nodes[n].singleton_index().is_none()
    }

    fn entry(&self, r: &Rel, nodes: &[NodeRef]) -> Lia {
        let key = (r.clone(), nodes.to_vec());
        if let Some(f) = self.params.borrow().entries.get(&key) {
            return f.clone();
        }
        let t = format!("{}_{}", r.name(), tag(nodes));
        let free: Vec<usize> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| match n {
                NodeRef::Loc(n) => self.is_ray(*n),
                NodeRef::Int => true,
            })
            .map(|(j, _)| j + 1)
            .collect();
        let f = if free.is_empty() {
            Lia::bool(&format!("e_{t}"))
        } else {
            let mut clauses = vec![];
            for c in 0..self.spec.clauses {
                let mut parts = vec![Lia::bool(&format!("e_{t}_{c}"))];
                let mut atom = |name: String, mk: &dyn Fn(Lin) -> Lia| {
                    let p = self.int_param(format!("p_{name}"), Some(-PARAM_BOUND), Some(PARAM_BOUND));
                    parts.push(Lia::implies(Lia::bool(&format!("g_{name}")), mk(p)));
                };
                for &a in &free {
                    let ia = Lin::var(&idx(a));
                    atom(format!("{t}_{c}_lo{a}"), &|p| Lia::ge(&ia, &p));
                    atom(format!("{t}_{c}_hi{a}"), &|p| Lia::le(&ia, &p));
                    for &b in &free {
                        if a != b {
                            let ib = Lin::var(&idx(b));
                            atom(format!("{t}_{c}_le{a}_{b}"), &|p| Lia::le(&ia, &ib.add(&p)));
                        }
                    }
                }
                clauses.push(Lia::and(parts));
            }
            Lia::or(clauses)
        };
        self.params.borrow_mut().entries.insert(key, f.clone());
        f
    }

    /// Range constraints of the integer parameters introduced so far.
    pub fn side_constraints(&self) -> Lia {
        let p = self.params.borrow();
        let mut out = vec![];
        for (name, (lo, hi)) in &p.ints {
            let v = Lin::var(name);
            if let Some(lo) = lo {
                out.push(Lia::ge(&v, &Lin::cst(*lo)));
            }
            if let Some(hi) = hi {
                out.push(Lia::le(&v, &Lin::cst(*hi)));
            }
        }
        Lia::and(out)
    }

    /// Concrete structure for a parameter assignment. Parameters the solver
    /// did not report default to 0 and false.
    pub fn instantiate(&self, a: &Assignment) -> SymbolicStructure {
        let ival = |n: &str| a.ints.get(n).copied().unwrap_or(0);
        let params = self.params.borrow();
        let ints: BTreeMap<String, Lin> = params.ints.keys().map(|n| (n.clone(), Lin::cst(ival(n)))).collect();
        let mut bools = a.bools.clone();
        let ground = |f: &Lia, bools: &mut BTreeMap<String, bool>| -> Lia {
            let mut bs = BTreeSet::new();
            f.bool_vars(&mut bs);
            for b in bs {
                bools.entry(b).or_insert(false);
            }
            f.subst(&ints).subst_bools(bools)
        };
        let mut constants = BTreeMap::new();
        for (c, n) in &self.placement {
            constants.insert(c.clone(), (NodeRef::Loc(*n), 0));
        }
        for (name, _) in params.ints.iter().filter(|(n, _)| n.starts_with("c_")) {
            constants.insert(name[2..].to_string(), (NodeRef::Int, ival(name)));
        }
        drop(params);
        let mut fields = vec![];
        for k in 0..self.field_sorts.len() {
            let mut col = vec![];
            for n in 0..self.nodes.len() {
                let cases = self.field(k, n).expect("template fields are total");
                let chosen = cases
                    .iter()
                    .find(|c| ground(&c.guard, &mut bools) == Lia::True)
                    .or(cases.last())
                    .expect("at least one case");
                let term = chosen.index.subst(&ints);
                col.push(FieldEntry { target: chosen.node, term });
            }
            fields.push(col);
        }
        let mut relations: BTreeMap<Rel, BTreeMap<Vec<NodeRef>, Lia>> = BTreeMap::new();
        let entries = self.params.borrow().entries.clone();
        for ((r, nodes), f) in entries {
            let g = ground(&f, &mut bools);
            let m = relations.entry(r).or_default();
            if g != Lia::False {
                m.insert(nodes, g);
            }
        }
        SymbolicStructure {
            nodes: self.nodes.clone(),
            null: self.null,
            field_sorts: self.field_sorts.clone(),
            constants,
            fields,
            relations,
        }
    }
}

impl Interpretation for Template {
    fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
    fn bound(&self, n: usize) -> Lia {
        self.nodes[n].bound.clone()
    }
    fn singleton(&self, n: usize) -> Option<i64> {
        self.nodes[n].singleton_index()
    }
    fn constant(&self, name: &str, sort: Sort) -> Result<Vec<Case>, CompileError> {
        match sort {
            Sort::Loc => {
                let n = self.placement.get(name).ok_or_else(|| CompileError::Unknown(name.to_string()))?;
                Ok(vec![Case::plain(NodeRef::Loc(*n), Lin::cst(0))])
            }
            Sort::Int => Ok(vec![Case::plain(NodeRef::Int, self.int_param(format!("c_{name}"), None, None))]),
        }
    }
    fn field(&self, k: usize, n: usize) -> Result<Vec<Case>, CompileError> {
        let sort = *self.field_sorts.get(k).ok_or_else(|| CompileError::Unknown(format!("m_{}", k + 1)))?;
        let i = Lin::var(IDX);
        if n == self.null {
            return Ok(vec![match sort {
                Sort::Loc => Case::plain(NodeRef::Loc(self.null), Lin::cst(0)),
                Sort::Int => Case::plain(NodeRef::Int, Lin::cst(0)),
            }]);
        }
        let src_ray = self.is_ray(n);
        if sort == Sort::Int {
            let v = self.int_param(format!("v_{k}_{n}"), None, None);
            if !src_ray {
                return Ok(vec![Case::plain(NodeRef::Int, v)]);
            }
            let w = Lia::bool(&format!("w_{k}_{n}"));
            return Ok(vec![
                Case { guard: w.clone(), node: NodeRef::Int, index: i.add(&v) },
                Case { guard: Lia::not(w), node: NodeRef::Int, index: v },
            ]);
        }
        let kn = self.nodes.len();
        let sel = self.int_param(format!("s_{k}_{n}"), Some(0), Some(kn as i64 - 1));
        let mut out = vec![];
        for t in 0..kn {
            let guard = Lia::eq(&sel, &Lin::cst(t as i64));
            let index = match (self.is_ray(t), src_ray) {
                (false, _) => Lin::cst(0),
                (true, false) => self.int_param(format!("o_{k}_{n}_{t}"), Some(0), Some(PARAM_BOUND)),
                (true, true) => i.add(&self.int_param(format!("d_{k}_{n}_{t}"), Some(0), Some(1))),
            };
            out.push(Case { guard, node: NodeRef::Loc(t), index });
        }
        Ok(out)
    }
    fn relation(&self, r: &Rel, nodes: &[NodeRef]) -> Result<Lia, CompileError> {
        Ok(self.entry(r, nodes))
    }
}

/// Side constraints and the compiled obligation, with the template's
/// parameters free.
pub fn compile_template(t: &Template, o: &Obligation) -> Result<Lia, CompileError> {
    let mut parts = vec![];
    for s in o.sentences() {
        parts.push(compile_sentence(t, s)?);
    }
    parts.push(t.side_constraints());
    Ok(Lia::and(parts))
}

#[derive(Debug, Clone)]
pub struct FoundModel {
    pub structure: SymbolicStructure,
    pub spec: TemplateSpec,
    pub blocks: Vec<Vec<String>>,
    pub attempts: usize,
}

/// All set partitions of `items`, most blocks first.
fn partitions(items: &[String]) -> Vec<Vec<Vec<String>>> {
    fn go(items: &[String], i: usize, cur: &mut Vec<Vec<String>>, out: &mut Vec<Vec<Vec<String>>>) {
        if i == items.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(items[i].clone());
            go(items, i + 1, cur, out);
            cur[b].pop();
        }
        cur.push(vec![items[i].clone()]);
        go(items, i + 1, cur, out);
        cur.pop();
    }
    let mut out = vec![];
    go(items, 0, &mut vec![], &mut out);
    out.sort_by_key(|p| std::cmp::Reverse(p.len()));
    out
}

/// Ground (dis)equalities between location constants at the top level of
/// the obligation's conjunctions.
fn ground_literals(o: &Obligation) -> (Vec<(String, String)>, Vec<(String, String)>) {
    fn walk(f: &Fo, eqs: &mut Vec<(String, String)>, neqs: &mut Vec<(String, String)>) {
        match f {
            Fo::And(v) => v.iter().for_each(|c| walk(c, eqs, neqs)),
            Fo::Eq(Term::Const(a), Term::Const(b)) if a.sort == Sort::Loc => eqs.push((a.name.clone(), b.name.clone())),
            Fo::Not(g) => {
                if let Fo::Eq(Term::Const(a), Term::Const(b)) = g.as_ref() {
                    if a.sort == Sort::Loc {
                        neqs.push((a.name.clone(), b.name.clone()));
                    }
                }
            }
            _ => {}
        }
    }
    let (mut eqs, mut neqs) = (vec![], vec![]);
    for s in o.sentences() {
        walk(s, &mut eqs, &mut neqs);
    }
    (eqs, neqs)
}

/// Search the templates in order for a symbolic model of every sentence of
/// `o`. Returned structures are validated and model-checked; a failure
/// there is an internal error.
pub fn find_model(
    o: &Obligation,
    specs: &[TemplateSpec],
    solver: &Solver,
    timeout: Duration,
) -> Result<Option<FoundModel>, SymbolicError> {
    let start = Instant::now();
    if timeout.is_zero() {
        return Ok(None);
    }
    let mut locs: Vec<String> =
        o.signature.constants.iter().filter(|(_, s)| **s == Sort::Loc).map(|(c, _)| c.clone()).collect();
    if !locs.iter().any(|c| c == NIL) {
        locs.push(NIL.to_string());
    }
    let (eqs, neqs) = ground_literals(o);
    let consistent = |p: &Vec<Vec<String>>| {
        let block = |c: &str| p.iter().position(|b| b.iter().any(|x| x == c));
        eqs.iter().all(|(a, b)| block(a) == block(b)) && neqs.iter().all(|(a, b)| block(a) != block(b))
    };
    let parts: Vec<Vec<Vec<String>>> = partitions(&locs).into_iter().filter(consistent).collect();
    let mut attempts = 0;
    for spec in specs {
        for blocks in &parts {
            let elapsed = start.elapsed();
            if elapsed >= timeout || solver.cancel.as_ref().is_some_and(|c| c.load(std::sync::atomic::Ordering::Relaxed))
            {
                return Ok(None);
            }
            let remaining = timeout - elapsed;
            let slice = remaining.min((remaining / 3).max(Duration::from_secs(3)));
            attempts += 1;
            let t = Template::new(*spec, &o.signature.field_sorts, blocks);
            if let Some(s) = solve_template(&t, o, solver, start, slice)? {
                return Ok(Some(FoundModel { structure: s, spec: *spec, blocks: blocks.clone(), attempts }));
            }
        }
    }
    Ok(None)
}

/// Index windows tried per skeleton. Each round solves the windowed
/// (quantifier-free) query and keeps the candidate only if it passes the
/// exact model check.
const WINDOWS: [i64; 2] = [6, 10];

/// Magnitude bound on offset parameters. Together with the windows this
/// keeps candidates from fitting the window edge.
const PARAM_BOUND: i64 = 2;

/// Formula nodes visited per windowed sentence before a skeleton is given up.
const MAX_COMPILE_STEPS: usize = 2_000_000;

fn solve_template(
    t: &Template,
    o: &Obligation,
    solver: &Solver,
    start: Instant,
    slice: Duration,
) -> Result<Option<SymbolicStructure>, SymbolicError> {
    let deadline = start.elapsed() + slice;
    for w in WINDOWS {
        let left = deadline.saturating_sub(start.elapsed());
        if left.is_zero() {
            return Ok(None);
        }
        let mut parts = vec![];
        let until = Instant::now() + left;
        for s in o.sentences() {
            match compile_windowed(t, s, w, MAX_COMPILE_STEPS, Some(until)) {
                Ok(f) => parts.push(f),
                Err(CompileError::Budget) => return Ok(None),
                Err(e) => return Err(e.into()),
            }
        }
        parts.push(t.side_constraints());
        let query = Lia::and(parts);
        let Some(Some(assignment)) = lia::solve(solver, &query, left)? else {
            return Ok(None);
        };
        let mut s = t.instantiate(&assignment);
        if certifies(&s, o, solver, Duration::from_secs(10))? {
            let raw = s.clone();
            simplify_relations(&mut s, solver, Duration::from_secs(5))?;
            // The simplified form must certify too; keep the raw one if not.
            if certifies(&s, o, solver, Duration::from_secs(10))? {
                return Ok(Some(s));
            }
            return Ok(Some(raw));
        }
    }
    Ok(None)
}

/// Structure invariants plus every obligation sentence.
pub fn certifies(s: &SymbolicStructure, o: &Obligation, solver: &Solver, timeout: Duration) -> Result<bool, SymbolicError> {
    match validate_structure(s, solver, timeout) {
        Ok(()) => {}
        Err(SymbolicError::Invalid(_)) => return Ok(false),
        Err(e) => return Err(e),
    }
    for a in &o.assertions {
        if !model_check(s, &a.sentence, solver, timeout)? {
            return Ok(false);
        }
    }
    Ok(true)
}
