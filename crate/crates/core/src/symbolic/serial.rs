//! JSON and DOT forms of symbolic structures.

use super::{FieldEntry, Node, NodeRef, SymbolicStructure};
use crate::encode::fo::Rel;
use crate::lia::{parse_lia, parse_lin, Lia};
use crate::sl::Sort;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeJson {
    pub name: String,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueJson {
    pub node: String,
    pub index: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldJson {
    pub node: String,
    pub term: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryJson {
    pub nodes: Vec<String>,
    pub formula: String,
}

/// Serialized form. Nodes are referred to by name; `int` is the integer
/// node. Field maps are keyed by source node name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub field_sorts: Vec<Sort>,
    pub nodes: Vec<NodeJson>,
    pub null: String,
    pub constants: BTreeMap<String, ValueJson>,
    pub fields: Vec<BTreeMap<String, FieldJson>>,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<EntryJson>>,
}

pub fn to_json(s: &SymbolicStructure) -> StructureJson {
    let name = |r: NodeRef| s.node_name(r).to_string();
    StructureJson {
        field_sorts: s.field_sorts.clone(),
        nodes: s.nodes.iter().map(|n| NodeJson { name: n.name.clone(), bound: n.bound.to_string() }).collect(),
        null: s.nodes[s.null].name.clone(),
        constants: s
            .constants
            .iter()
            .map(|(c, (n, z))| (c.clone(), ValueJson { node: name(*n), index: *z }))
            .collect(),
        fields: s
            .fields
            .iter()
            .map(|col| {
                col.iter()
                    .enumerate()
                    .map(|(n, e)| {
                        (s.nodes[n].name.clone(), FieldJson { node: name(e.target), term: e.term.to_string() })
                    })
                    .collect()
            })
            .collect(),
        relations: s
            .relations
            .iter()
            .map(|(r, entries)| {
                let v = entries
                    .iter()
                    .filter(|(_, f)| **f != Lia::False)
                    .map(|(t, f)| EntryJson { nodes: t.iter().map(|n| name(*n)).collect(), formula: f.to_string() })
                    .collect();
                (r.name(), v)
            })
            .collect(),
    }
}

pub fn from_json(j: &StructureJson) -> Result<SymbolicStructure, String> {
    let mut nodes = vec![];
    for n in &j.nodes {
        let bound = parse_lia(&n.bound).map_err(|e| format!("node `{}`: {e}", n.name))?;
        nodes.push(Node { name: n.name.clone(), bound });
    }
    let lookup = |name: &str| -> Result<NodeRef, String> {
        if name == "int" {
            return Ok(NodeRef::Int);
        }
        nodes
            .iter()
            .position(|n| n.name == name)
            .map(NodeRef::Loc)
            .ok_or_else(|| format!("unknown node `{name}`"))
    };
    let null = match lookup(&j.null)? {
        NodeRef::Loc(n) => n,
        NodeRef::Int => return Err("null node cannot be `int`".into()),
    };
    let mut constants = BTreeMap::new();
    for (c, v) in &j.constants {
        constants.insert(c.clone(), (lookup(&v.node)?, v.index));
    }
    let mut fields = vec![];
    for (k, col) in j.fields.iter().enumerate() {
        let mut entries = vec![];
        for n in &nodes {
            let e = col.get(&n.name).ok_or_else(|| format!("field m_{} missing on node `{}`", k + 1, n.name))?;
            let term = parse_lin(&e.term).map_err(|e| e.to_string())?;
            entries.push(FieldEntry { target: lookup(&e.node)?, term });
        }
        if let Some(extra) = col.keys().find(|k| !nodes.iter().any(|n| n.name == **k)) {
            return Err(format!("field m_{} given on unknown node `{extra}`", k + 1));
        }
        fields.push(entries);
    }
    let mut relations = BTreeMap::new();
    for (rname, entries) in &j.relations {
        let r = Rel::parse(rname).ok_or_else(|| format!("`{rname}` is not a relation name"))?;
        let mut m = BTreeMap::new();
        for e in entries {
            let t = e.nodes.iter().map(|n| lookup(n)).collect::<Result<Vec<_>, _>>()?;
            let f = parse_lia(&e.formula).map_err(|e| e.to_string())?;
            if m.insert(t, f).is_some() {
                return Err(format!("duplicate entry for {rname}({})", e.nodes.join(", ")));
            }
        }
        relations.insert(r, m);
    }
    Ok(SymbolicStructure { nodes, null, field_sorts: j.field_sorts.clone(), constants, fields, relations })
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT rendering: one circle per node, double circles for `infinite`
/// nodes, edges for location-valued fields labelled with their term.
pub fn render_dot(s: &SymbolicStructure, infinite: &[usize]) -> String {
    let mut out = String::from("digraph symbolic {\n  rankdir=LR;\n");
    for (n, node) in s.nodes.iter().enumerate() {
        let consts: Vec<&str> = s
            .constants
            .iter()
            .filter(|(_, (r, _))| *r == NodeRef::Loc(n))
            .map(|(c, _)| c.as_str())
            .collect();
        let mut label = esc(&node.name);
        if !consts.is_empty() && consts != [node.name.as_str()] {
            label = format!("{label}\\n{}", esc(&consts.join(", ")));
        }
        if node.singleton_index().is_none() {
            label = format!("{label}\\n{}", esc(&node.bound.to_string()));
        }
        let shape = if infinite.contains(&n) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  n{n} [shape={shape}, label=\"{label}\"];");
    }
    for (k, col) in s.fields.iter().enumerate() {
        for (n, e) in col.iter().enumerate() {
            if let NodeRef::Loc(t) = e.target {
                if n == s.null && t == s.null {
                    continue;
                }
                let lbl = if s.fields.len() > 1 { format!("m_{}: {}", k + 1, e.term) } else { e.term.to_string() };
                let _ = writeln!(out, "  n{n} -> n{t} [label=\"{}\"];", esc(&lbl));
            }
        }
    }
    out.push_str("}\n");
    out
}
