//! Certification of candidate counter-models, rogueness evidence and the
//! archetype taxonomy of rogue models.

use crate::encode::fo::{Fo, Rel};
use crate::encode::{same_heaplet, Obligation, Role};
use crate::semantics::{eval_fo, is_fixpoint, lfp_interpret, FoStructure, HeapStructure, Heaplet, SemanticsError, Value};
use crate::sl::{Sid, Sort};
use crate::solver::Solver;
use crate::symbolic::{infinite_nodes, model_check, render_dot, to_json, validate_structure, NodeRef, SymbolicError, SymbolicStructure};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::time::Duration;
use thiserror::Error;

/// Largest finite model for which the least fixpoint is recomputed.
pub const MAX_LFP_LOCS: u32 = 8;

#[derive(Debug, Error)]
pub enum RogueError {
    #[error("model rejected: {}", .failing.join("; "))]
    Rejected { failing: Vec<String> },
    #[error("heap-reducing problem but the model has no infinite node and is not a least fixpoint")]
    FiniteRogue,
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

#[derive(Debug, Clone)]
pub enum CandidateModel {
    Symbolic(SymbolicStructure),
    Finite(FoStructure),
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionVerdict {
    pub role: Role,
    pub name: String,
    pub holds: bool,
}

/// How the model relates to one consequent disjunct.
#[derive(Debug, Clone, Serialize)]
pub struct DisjunctReport {
    pub index: usize,
    pub formula: String,
    /// Some choice of the consequent existentials gives the disjunct the
    /// antecedent's heaplet.
    pub heaplet_match: bool,
    /// Some choice makes the disjunct's FO part true.
    pub fo_holds: bool,
}

impl DisjunctReport {
    pub fn reason(&self) -> &'static str {
        match (self.heaplet_match, self.fo_holds) {
            (false, _) => "no instance has the antecedent's heaplet",
            (true, false) => "its pure and spatial constraints are false",
            (true, true) => "no instance satisfies both heaplet and constraints",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rogueness {
    /// Nodes with infinitely many elements.
    Infinite { nodes: Vec<String> },
    /// Finite, predicates a fixpoint but not the least one.
    NotLeast,
    /// Finite with least-fixpoint predicates: an ordinary counter-model.
    Standard,
    /// Finite model too large to recompute the least fixpoint.
    Unchecked { locations: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    /// A list that never reaches null.
    ListNoNull,
    /// A list that never reaches a location other than null.
    ListMissesLocation,
    /// Two disjoint infinite lists.
    TwoLists,
    /// A tree with a path that never reaches null.
    TreeNoNull,
    /// A tree with a path that never reaches a location other than null.
    TreeMissesLocation,
    /// A tree with a path that never reaches a location which itself never
    /// reaches null.
    TreeMissesDivergent,
    Unknown,
}

impl Archetype {
    pub fn number(self) -> Option<u8> {
        match self {
            Archetype::ListNoNull => Some(1),
            Archetype::ListMissesLocation => Some(2),
            Archetype::TwoLists => Some(3),
            Archetype::TreeNoNull => Some(4),
            Archetype::TreeMissesLocation => Some(5),
            Archetype::TreeMissesDivergent => Some(6),
            Archetype::Unknown => None,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Archetype::ListNoNull => "a list that never reaches null",
            Archetype::ListMissesLocation => "a list that never reaches some location other than null",
            Archetype::TwoLists => "two disjoint infinite lists",
            Archetype::TreeNoNull => "a tree where one path never reaches null",
            Archetype::TreeMissesLocation => "a tree where one path never reaches some location other than null",
            Archetype::TreeMissesDivergent => {
                "a tree where one path never reaches a location that itself never reaches null"
            }
            Archetype::Unknown => "no known archetype",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub archetype: Archetype,
    /// False when the shape has nodes beyond the archetype's sketch.
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub verdicts: Vec<AssertionVerdict>,
    pub disjuncts: Vec<DisjunctReport>,
    pub rogueness: Rogueness,
    pub classification: Classification,
    pub model: CandidateModel,
    pub infinite: Vec<usize>,
}

pub struct CertifyOptions<'a> {
    pub solver: &'a Solver,
    pub timeout: Duration,
    /// Used to check finite models against the least fixpoint.
    pub sid: Option<&'a Sid>,
    /// Reject finite structures that are not least fixpoints and symbolic
    /// structures without an infinite node.
    pub heap_reducing: bool,
    /// Display forms of the consequent disjuncts.
    pub disjunct_names: Vec<String>,
}

enum Checker<'a> {
    Symbolic(&'a SymbolicStructure, &'a Solver, Duration),
    Finite(&'a FoStructure),
}

impl Checker<'_> {
    fn holds(&self, f: &Fo) -> Result<bool, RogueError> {
        match self {
            Checker::Symbolic(s, solver, t) => Ok(model_check(s, f, solver, *t)?),
            Checker::Finite(m) => Ok(eval_fo(m, &vec![], f)?),
        }
    }
}

/// Model-check every sentence of `o` and collect rogueness evidence.
pub fn certify(model: CandidateModel, o: &Obligation, opts: &CertifyOptions) -> Result<Certificate, RogueError> {
    if let CandidateModel::Symbolic(s) = &model {
        validate_structure(s, opts.solver, opts.timeout)?;
    }
    let checker = match &model {
        CandidateModel::Symbolic(s) => Checker::Symbolic(s, opts.solver, opts.timeout),
        CandidateModel::Finite(m) => Checker::Finite(m),
    };
    let mut verdicts = vec![];
    for a in &o.assertions {
        verdicts.push(AssertionVerdict { role: a.role, name: a.name.clone(), holds: checker.holds(&a.sentence)? });
    }
    let failing: Vec<String> = verdicts.iter().filter(|v| !v.holds).map(|v| format!("{} is false", v.name)).collect();
    if !failing.is_empty() {
        return Err(RogueError::Rejected { failing });
    }
    let mut disjuncts = vec![];
    if let Some(parts) = &o.refutation {
        for (i, (fo_i, eta_i)) in parts.disjuncts.iter().enumerate() {
            let m = Fo::exists(parts.exists.clone(), same_heaplet(&parts.antecedent_eta, eta_i));
            let f = Fo::exists(parts.exists.clone(), fo_i.clone());
            disjuncts.push(DisjunctReport {
                index: i,
                formula: opts.disjunct_names.get(i).cloned().unwrap_or_else(|| format!("disjunct {}", i + 1)),
                heaplet_match: checker.holds(&m)?,
                fo_holds: checker.holds(&f)?,
            });
        }
    }
    let (rogueness, infinite, classification) = match &model {
        CandidateModel::Symbolic(s) => {
            let inf = infinite_nodes(s, opts.solver, opts.timeout)?;
            let c = classify_archetype(s, &inf);
            if inf.is_empty() {
                if opts.heap_reducing {
                    return Err(RogueError::FiniteRogue);
                }
                (Rogueness::Unchecked { locations: s.nodes.len() as u32 }, inf, c)
            } else {
                let names = inf.iter().map(|n| s.nodes[*n].name.clone()).collect();
                (Rogueness::Infinite { nodes: names }, inf, c)
            }
        }
        CandidateModel::Finite(m) => {
            let r = finite_rogueness(m, opts.sid)?;
            if opts.heap_reducing && r == Rogueness::NotLeast {
                return Err(RogueError::FiniteRogue);
            }
            (r, vec![], Classification { archetype: Archetype::Unknown, exact: true })
        }
    };
    Ok(Certificate { verdicts, disjuncts, rogueness, classification, model, infinite })
}

/// Read a finite FO model back as a heap structure with predicate
/// interpretations taken from `P_fo` and `P_eta`.
pub fn heap_of(m: &FoStructure, sid: &Sid) -> HeapStructure {
    let heap = (1..m.num_locs as usize).map(|l| m.fields.iter().map(|f| f[l]).collect()).collect();
    let mut preds = BTreeMap::new();
    for d in sid.iter() {
        let mut interp = BTreeSet::new();
        let eta = m.relations.get(&Rel::eta(&d.name));
        for args in m.relations.get(&Rel::fo(&d.name)).into_iter().flatten() {
            let locs = (1..m.num_locs).filter(|l| {
                let mut t = args.clone();
                t.push(Value::Loc(*l));
                eta.is_some_and(|e| e.contains(&t))
            });
            interp.insert((args.clone(), Heaplet::from_locs(locs)));
        }
        preds.insert(d.name.clone(), interp);
    }
    HeapStructure {
        num_locs: m.num_locs,
        ints: m.ints,
        field_sorts: m.field_sorts.clone(),
        heap,
        constants: m.constants.iter().filter(|(c, _)| *c != crate::sl::NIL).map(|(c, v)| (c.clone(), *v)).collect(),
        preds,
    }
}

fn finite_rogueness(m: &FoStructure, sid: Option<&Sid>) -> Result<Rogueness, RogueError> {
    let Some(sid) = sid else {
        return Ok(Rogueness::Unchecked { locations: m.num_locs });
    };
    if m.num_locs > MAX_LFP_LOCS || m.field_sorts.contains(&Sort::Int) {
        return Ok(Rogueness::Unchecked { locations: m.num_locs });
    }
    let h = heap_of(m, sid);
    if !is_fixpoint(&h, sid)? {
        return Err(RogueError::Rejected { failing: vec!["predicates are not a fixpoint".into()] });
    }
    let (lfp, _) = lfp_interpret(&h, sid)?;
    Ok(if lfp.preds == h.preds { Rogueness::Standard } else { Rogueness::NotLeast })
}

/// Node-level successor lists over location-valued fields.
fn node_graph(s: &SymbolicStructure) -> Vec<BTreeSet<usize>> {
    let mut g = vec![BTreeSet::new(); s.nodes.len()];
    for col in &s.fields {
        for (n, e) in col.iter().enumerate() {
            if let NodeRef::Loc(t) = e.target {
                if n != s.null {
                    g[n].insert(t);
                }
            }
        }
    }
    g
}

fn reach(g: &[BTreeSet<usize>], from: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        for &t in &g[n] {
            if seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen
}

/// Match the node/edge shape against the six archetypes. `infinite` lists
/// the nodes with infinitely many elements. Heuristic: node-level
/// reachability over-approximates element-level reachability.
pub fn classify_archetype(s: &SymbolicStructure, infinite: &[usize]) -> Classification {
    let unknown = Classification { archetype: Archetype::Unknown, exact: true };
    let g = node_graph(s);
    let reaches: Vec<BTreeSet<usize>> = (0..s.nodes.len()).map(|n| reach(&g, n)).collect();
    let cyclic: Vec<bool> = (0..s.nodes.len()).map(|n| reaches[n].contains(&n)).collect();
    let rays: Vec<usize> = infinite.iter().copied().filter(|&n| cyclic[n]).collect();
    if rays.is_empty() {
        return unknown;
    }
    // Ray components under ray-to-ray edges, ignoring direction.
    let mut comp: BTreeMap<usize, usize> = rays.iter().map(|&r| (r, r)).collect();
    fn find(comp: &mut BTreeMap<usize, usize>, x: usize) -> usize {
        let p = comp[&x];
        if p == x {
            return x;
        }
        let r = find(comp, p);
        comp.insert(x, r);
        r
    }
    for &a in &rays {
        for &b in &g[a] {
            if comp.contains_key(&b) {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                comp.insert(ra, rb);
            }
        }
    }
    let components: BTreeSet<usize> = rays.iter().map(|&r| find(&mut comp, r)).collect();
    let ray_set: BTreeSet<usize> = rays.iter().copied().collect();
    let finite: Vec<usize> = (0..s.nodes.len()).filter(|n| *n != s.null && !infinite.contains(n)).collect();
    let entries: BTreeSet<usize> =
        finite.iter().copied().filter(|n| reaches[*n].iter().any(|t| ray_set.contains(t))).collect();
    // A finite node some ray never reaches, other than the ray's entries.
    let missed: Vec<usize> = finite
        .iter()
        .copied()
        .filter(|u| !entries.contains(u) && rays.iter().any(|r| !reaches[*r].contains(u)))
        .collect();
    let divergent = |u: usize| reaches[u].iter().any(|t| cyclic[*t]) || cyclic[u];
    let loc_fields = s.field_sorts.iter().filter(|k| **k == Sort::Loc).count();
    let all_entries = finite.iter().all(|n| entries.contains(n));
    let one = components.len() == 1;
    let (archetype, exact) = if loc_fields <= 1 {
        if components.len() >= 2 {
            (Archetype::TwoLists, components.len() == 2 && all_entries)
        } else if !missed.is_empty() {
            (Archetype::ListMissesLocation, one)
        } else {
            (Archetype::ListNoNull, all_entries)
        }
    } else if components.len() >= 2 || missed.iter().any(|u| divergent(*u)) {
        (Archetype::TreeMissesDivergent, components.len() <= 2)
    } else if !missed.is_empty() {
        (Archetype::TreeMissesLocation, one)
    } else {
        (Archetype::TreeNoNull, all_entries)
    };
    Classification { archetype, exact }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
    Text,
}

fn finite_json(m: &FoStructure) -> serde_json::Value {
    let val = |v: &Value| match v {
        Value::Loc(l) => serde_json::json!(format!("l{l}")),
        Value::Int(z) => serde_json::json!(z),
    };
    let fields: Vec<Vec<serde_json::Value>> = m.fields.iter().map(|f| f.iter().map(val).collect()).collect();
    let constants: BTreeMap<&String, serde_json::Value> = m.constants.iter().map(|(c, v)| (c, val(v))).collect();
    let relations: BTreeMap<String, Vec<Vec<serde_json::Value>>> = m
        .relations
        .iter()
        .map(|(r, ts)| (r.name(), ts.iter().map(|t| t.iter().map(val).collect()).collect()))
        .collect();
    serde_json::json!({
        "locations": m.num_locs,
        "constants": constants,
        "fields": fields,
        "relations": relations,
    })
}

pub fn certificate_json(c: &Certificate) -> serde_json::Value {
    let model = match &c.model {
        CandidateModel::Symbolic(s) => serde_json::json!({ "symbolic": to_json(s) }),
        CandidateModel::Finite(m) => serde_json::json!({ "finite": finite_json(m) }),
    };
    serde_json::json!({
        "verdicts": c.verdicts,
        "disjuncts": c.disjuncts,
        "rogueness": c.rogueness,
        "archetype": c.classification.archetype,
        "archetype_number": c.classification.archetype.number(),
        "archetype_exact": c.classification.exact,
        "model": model,
    })
}

fn text(c: &Certificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "certified counter-model");
    for v in &c.verdicts {
        let _ = writeln!(out, "  {:<12} {}: {}", format!("{:?}", v.role).to_lowercase(), v.name, v.holds);
    }
    for d in &c.disjuncts {
        let _ = writeln!(out, "  violated: {} ({})", d.formula, d.reason());
    }
    match &c.rogueness {
        Rogueness::Infinite { nodes } => {
            let _ = writeln!(out, "  infinite nodes: {}", nodes.join(", "));
        }
        Rogueness::NotLeast => {
            let _ = writeln!(out, "  finite, predicates are a fixpoint but not the least one");
        }
        Rogueness::Standard => {
            let _ = writeln!(out, "  finite, least-fixpoint predicates: a standard counter-model");
        }
        Rogueness::Unchecked { locations } => {
            let _ = writeln!(out, "  finite with {locations} locations, least fixpoint not checked");
        }
    }
    let a = c.classification.archetype;
    match a.number() {
        Some(k) => {
            let flag = if c.classification.exact { "" } else { " (approximate match)" };
            let _ = writeln!(out, "  archetype {k}: {}{flag}", a.description());
        }
        None => {
            let _ = writeln!(out, "  archetype: unknown");
        }
    }
    out
}

pub fn render(c: &Certificate, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(&certificate_json(c)).expect("certificate serializes"),
        Format::Dot => match &c.model {
            CandidateModel::Symbolic(s) => render_dot(s, &c.infinite),
            CandidateModel::Finite(m) => finite_dot(m),
        },
        Format::Text => text(c),
    }
}

fn finite_dot(m: &FoStructure) -> String {
    let mut out = String::from("digraph finite {\n  rankdir=LR;\n");
    for l in 0..m.num_locs {
        let names: Vec<&str> =
            m.constants.iter().filter(|(_, v)| **v == Value::Loc(l)).map(|(c, _)| c.as_str()).collect();
        let label = if names.is_empty() { format!("l{l}") } else { format!("l{l}\\n{}", names.join(", ")) };
        let _ = writeln!(out, "  l{l} [shape=circle, label=\"{label}\"];");
    }
    for (k, f) in m.fields.iter().enumerate() {
        for (l, v) in f.iter().enumerate().skip(1) {
            if let Value::Loc(t) = v {
                let _ = writeln!(out, "  l{l} -> l{t} [label=\"m_{}\"];", k + 1);
            }
        }
    }
    out.push_str("}\n");
    out
}
