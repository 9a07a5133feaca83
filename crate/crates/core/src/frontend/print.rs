use crate::sl::*;
use std::fmt::{self, Display, Write};

impl Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(s) | Term::Var(s) => write!(f, "{}", s.name),
            Term::Int(n) => write!(f, "{n}"),
            Term::Add(a, b) => {
                write!(f, "{a}")?;
                match b.as_ref() {
                    Term::Int(n) if *n < 0 => write!(f, " - {}", n.unsigned_abs()),
                    Term::Add(..) => write!(f, " + ({b})"),
                    _ => write!(f, " + {b}"),
                }
            }
            Term::Field { index, base, .. } => write!(f, "m_{}({base})", index + 1),
        }
    }
}

/// Formula printer carrying the record type name used for points-to atoms.
pub struct Pretty<'a> {
    pub formula: &'a Formula,
    pub type_name: &'a str,
}

impl Display for Pretty<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self.formula, self.type_name, 0, true)?;
        f.write_str(&s)
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Pretty { formula: self, type_name: "node" }.fmt(f)
    }
}

impl Formula {
    pub fn pretty<'a>(&'a self, shape: &'a RecordShape) -> Pretty<'a> {
        let type_name = if shape.type_name.is_empty() { "node" } else { &shape.type_name };
        Pretty { formula: self, type_name }
    }
}

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 0,
        Formula::Or(_) => 1,
        Formula::And(_) => 2,
        Formula::Sep(_) => 3,
        _ => 4,
    }
}

fn join_terms(ts: &[Term]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

fn write_formula(out: &mut String, f: &Formula, ty: &str, min_prec: u8, allow_quant: bool) -> fmt::Result {
    match f {
        Formula::Eq(a, b) => write!(out, "{a} = {b}"),
        Formula::Neq(a, b) => write!(out, "{a} != {b}"),
        Formula::Lt(a, b) => write!(out, "{a} < {b}"),
        Formula::NotLt(a, b) => write!(out, "{a} >= {b}"),
        Formula::Emp => write!(out, "emp"),
        Formula::PointsTo(t, ts) => write!(out, "{t}->{ty}{{{}}}", join_terms(ts)),
        Formula::Pred(p, ts) => write!(out, "{p}({})", join_terms(ts)),
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            let kw = if matches!(f, Formula::Exists(..)) { "exists" } else { "forall" };
            let names: Vec<&str> = vs.iter().map(|v| v.name.as_str()).collect();
            if !allow_quant {
                out.push('(');
            }
            write!(out, "{kw} {}. ", names.join(", "))?;
            write_formula(out, b, ty, 0, true)?;
            if !allow_quant {
                out.push(')');
            }
            Ok(())
        }
        Formula::Implies(a, b) => {
            let paren = min_prec > 0;
            if paren {
                out.push('(');
            }
            write_formula(out, a, ty, 1, false)?;
            out.push_str(" => ");
            write_formula(out, b, ty, 0, true)?;
            if paren {
                out.push(')');
            }
            Ok(())
        }
        Formula::Or(v) | Formula::And(v) | Formula::Sep(v) => {
            let p = prec(f);
            let op = match f {
                Formula::Or(_) => " \\/ ",
                Formula::And(_) => " & ",
                _ => " * ",
            };
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            for (i, c) in v.iter().enumerate() {
                if i > 0 {
                    out.push_str(op);
                }
                write_formula(out, c, ty, p + 1, false)?;
            }
            if paren {
                out.push(')');
            }
            Ok(())
        }
    }
}

pub fn print_def(def: &PredDef, shape: &RecordShape) -> String {
    let params: Vec<&str> = def.params.iter().map(|p| p.name.as_str()).collect();
    let cases: Vec<Formula> =
        (0..def.cases.len()).map(|j| Formula::exists(def.case_exists(j), def.cases[j].clone())).collect();
    let body = if cases.len() == 1 { cases.into_iter().next().unwrap() } else { Formula::Or(cases) };
    format!("pred {}({}) := {};", def.name, params.join(", "), body.pretty(shape))
}

pub fn print_problem(p: &Problem) -> String {
    let mut s = String::new();
    let shape = &p.vocab.shape;
    if !shape.type_name.is_empty() {
        let _ = write!(s, "data {} {{", shape.type_name);
        for (name, sort) in &shape.fields {
            let ty = match sort {
                Sort::Loc => shape.type_name.as_str(),
                Sort::Int => "int",
            };
            let _ = write!(s, " {ty} {name};");
        }
        s.push_str(" };\n");
    }
    for def in p.sid.iter() {
        s.push_str(&print_def(def, shape));
        s.push('\n');
    }
    let ants: Vec<String> = p.antecedents.iter().map(|a| a.pretty(shape).to_string()).collect();
    let _ = writeln!(s, "checkentail {} |- {};", ants.join(", "), p.consequent.pretty(shape));
    s
}
