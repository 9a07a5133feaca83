use crate::encode::fo::{Fo, Rel};
use crate::encode::{Obligation, Signature};
use crate::sl::{Sort, Symbol, Term};
use std::fmt::Write;

pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.as_bytes()[0].is_ascii_digit()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Loc => "Loc",
        Sort::Int => "Int",
    }
}

pub fn field_name(i: usize) -> String {
    format!("m_{}", i + 1)
}

pub fn term(t: &Term) -> String {
    match t {
        Term::Const(s) | Term::Var(s) => symbol(&s.name),
        Term::Int(n) if *n < 0 => format!("(- {})", n.unsigned_abs()),
        Term::Int(n) => n.to_string(),
        Term::Add(a, b) => format!("(+ {} {})", term(a), term(b)),
        Term::Field { index, base, .. } => format!("({} {})", field_name(*index), term(base)),
    }
}

fn binders(vs: &[Symbol]) -> String {
    vs.iter().map(|v| format!("({} {})", symbol(&v.name), sort_name(v.sort))).collect::<Vec<_>>().join(" ")
}

pub fn formula(f: &Fo) -> String {
    let mut s = String::new();
    write_fo(&mut s, f);
    s
}

fn write_fo(out: &mut String, f: &Fo) {
    let nary = |out: &mut String, op: &str, v: &[&Fo]| {
        out.push('(');
        out.push_str(op);
        for c in v {
            out.push(' ');
            write_fo(out, c);
        }
        out.push(')');
    };
    match f {
        Fo::True => out.push_str("true"),
        Fo::False => out.push_str("false"),
        Fo::Eq(a, b) => {
            let _ = write!(out, "(= {} {})", term(a), term(b));
        }
        Fo::Lt(a, b) => {
            let _ = write!(out, "(< {} {})", term(a), term(b));
        }
        Fo::Rel(r, ts) => {
            if ts.is_empty() {
                out.push_str(&symbol(&r.name()));
            } else {
                let args: Vec<String> = ts.iter().map(term).collect();
                let _ = write!(out, "({} {})", symbol(&r.name()), args.join(" "));
            }
        }
        Fo::Not(a) => nary(out, "not", &[a]),
        Fo::And(v) => nary(out, "and", &v.iter().collect::<Vec<_>>()),
        Fo::Or(v) => nary(out, "or", &v.iter().collect::<Vec<_>>()),
        Fo::Implies(a, b) => nary(out, "=>", &[a, b]),
        Fo::Iff(a, b) => nary(out, "=", &[a, b]),
        Fo::Forall(vs, b) | Fo::Exists(vs, b) => {
            let q = if matches!(f, Fo::Forall(..)) { "forall" } else { "exists" };
            let _ = write!(out, "({q} ({}) ", binders(vs));
            write_fo(out, b);
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    /// Name assertions and request an unsat core.
    pub named: bool,
    pub models: bool,
    pub timeout_ms: Option<u64>,
}

pub fn declarations(sig: &Signature) -> String {
    let mut s = String::new();
    s.push_str("(declare-sort Loc 0)\n");
    for (i, fs) in sig.field_sorts.iter().enumerate() {
        let _ = writeln!(s, "(declare-fun {} (Loc) {})", field_name(i), sort_name(*fs));
    }
    for (p, sorts) in &sig.preds {
        let args: Vec<&str> = sorts.iter().map(|s| sort_name(*s)).collect();
        let _ = writeln!(s, "(declare-fun {} ({}) Bool)", symbol(&Rel::fo(p).name()), args.join(" "));
        let mut eargs = args.clone();
        eargs.push("Loc");
        let _ = writeln!(s, "(declare-fun {} ({}) Bool)", symbol(&Rel::eta(p).name()), eargs.join(" "));
    }
    for (c, sort) in &sig.constants {
        let _ = writeln!(s, "(declare-fun {} () {})", symbol(c), sort_name(*sort));
    }
    s
}

/// SMT-LIB 2 script for an obligation: declarations, one assertion per
/// sentence, `check-sat` and the follow-up queries the driver parses.
pub fn emit_smtlib(o: &Obligation, opts: &EmitOptions) -> String {
    let mut s = String::new();
    if opts.models {
        s.push_str("(set-option :produce-models true)\n");
    }
    if opts.named {
        s.push_str("(set-option :produce-unsat-cores true)\n");
    }
    if let Some(ms) = opts.timeout_ms {
        let _ = writeln!(s, "(set-option :timeout {ms})");
    }
    s.push_str(&declarations(&o.signature));
    for (i, a) in o.assertions.iter().enumerate() {
        let _ = writeln!(s, "; {}", a.name);
        if opts.named {
            let _ = writeln!(s, "(assert (! {} :named {}))", formula(&a.sentence), assertion_label(i));
        } else {
            let _ = writeln!(s, "(assert {})", formula(&a.sentence));
        }
    }
    s.push_str("(check-sat)\n");
    s.push_str("(get-info :reason-unknown)\n");
    if opts.models {
        s.push_str("(get-model)\n");
    }
    if opts.named {
        s.push_str("(get-unsat-core)\n");
    }
    s
}

pub fn assertion_label(i: usize) -> String {
    format!("A{i}")
}
