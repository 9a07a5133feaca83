//! Quantified linear integer arithmetic: linear expressions, formulas with
//! Boolean parameters, a small text syntax, SMT-LIB emission and decision
//! via the external solver.

use crate::sexp::{parse_all, Sexp};
use crate::solver::{Solver, SolverError};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Duration;
use thiserror::Error;

/// `sum coeffs[v] * v + konst`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Lin {
    pub coeffs: BTreeMap<String, i64>,
    pub konst: i64,
}

impl Lin {
    pub fn cst(c: i64) -> Lin {
        Lin { coeffs: BTreeMap::new(), konst: c }
    }
    pub fn var(name: &str) -> Lin {
        Lin { coeffs: BTreeMap::from([(name.to_string(), 1)]), konst: 0 }
    }
    pub fn is_const(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn add(&self, o: &Lin) -> Lin {
        let mut r = self.clone();
        for (v, c) in &o.coeffs {
            *r.coeffs.entry(v.clone()).or_insert(0) += c;
        }
        r.coeffs.retain(|_, c| *c != 0);
        r.konst += o.konst;
        r
    }
    pub fn scale(&self, k: i64) -> Lin {
        if k == 0 {
            return Lin::cst(0);
        }
        Lin { coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(), konst: self.konst * k }
    }
    pub fn sub(&self, o: &Lin) -> Lin {
        self.add(&o.scale(-1))
    }
    pub fn plus(&self, c: i64) -> Lin {
        self.add(&Lin::cst(c))
    }
    pub fn subst(&self, map: &BTreeMap<String, Lin>) -> Lin {
        let mut r = Lin::cst(self.konst);
        for (v, c) in &self.coeffs {
            match map.get(v) {
                Some(l) => r = r.add(&l.scale(*c)),
                None => r = r.add(&Lin::var(v).scale(*c)),
            }
        }
        r
    }
    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.coeffs.keys()
    }
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<i64> {
        let mut s = self.konst;
        for (v, c) in &self.coeffs {
            s += c * env.get(v)?;
        }
        Some(s)
    }
}

impl fmt::Display for Lin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let (sign, mag) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.konst)
        } else if self.konst > 0 {
            write!(f, " + {}", self.konst)
        } else if self.konst < 0 {
            write!(f, " - {}", -self.konst)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Eq,
    Le,
    Lt,
}

/// Formulas over integer variables and Boolean parameters. Atoms are
/// normalised to `lin cmp 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lia {
    True,
    False,
    Atom(Lin, Cmp),
    Bool(String),
    Not(Box<Lia>),
    And(Vec<Lia>),
    Or(Vec<Lia>),
    Forall(Vec<String>, Box<Lia>),
    Exists(Vec<String>, Box<Lia>),
}

impl Lia {
    pub fn atom(l: Lin, c: Cmp) -> Lia {
        if l.is_const() {
            let k = l.konst;
            let b = match c {
                Cmp::Eq => k == 0,
                Cmp::Le => k <= 0,
                Cmp::Lt => k < 0,
            };
            return if b { Lia::True } else { Lia::False };
        }
        match c {
            // Over the integers, a < 0 iff a + 1 <= 0.
            Cmp::Lt => Lia::Atom(l.plus(1), Cmp::Le),
            c => Lia::Atom(l, c),
        }
    }
    pub fn eq(a: &Lin, b: &Lin) -> Lia {
        Lia::atom(a.sub(b), Cmp::Eq)
    }
    pub fn le(a: &Lin, b: &Lin) -> Lia {
        Lia::atom(a.sub(b), Cmp::Le)
    }
    pub fn lt(a: &Lin, b: &Lin) -> Lia {
        Lia::atom(a.sub(b), Cmp::Lt)
    }
    pub fn ge(a: &Lin, b: &Lin) -> Lia {
        Lia::le(b, a)
    }
    pub fn bool(name: &str) -> Lia {
        Lia::Bool(name.to_string())
    }
    pub fn not(f: Lia) -> Lia {
        match f {
            Lia::True => Lia::False,
            Lia::False => Lia::True,
            Lia::Not(g) => *g,
            g => Lia::Not(Box::new(g)),
        }
    }
    pub fn and(parts: Vec<Lia>) -> Lia {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Lia::True => {}
                Lia::False => return Lia::False,
                Lia::And(v) => out.extend(v),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Lia::True,
            1 => out.pop().unwrap(),
            _ => Lia::And(out),
        }
    }
    pub fn or(parts: Vec<Lia>) -> Lia {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Lia::False => {}
                Lia::True => return Lia::True,
                Lia::Or(v) => out.extend(v),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Lia::False,
            1 => out.pop().unwrap(),
            _ => Lia::Or(out),
        }
    }
    pub fn implies(a: Lia, b: Lia) -> Lia {
        Lia::or(vec![Lia::not(a), b])
    }
    pub fn iff(a: Lia, b: Lia) -> Lia {
        match (a, b) {
            (Lia::True, x) | (x, Lia::True) => x,
            (Lia::False, x) | (x, Lia::False) => Lia::not(x),
            (a, b) if a == b => Lia::True,
            (a, b) => Lia::or(vec![Lia::and(vec![a.clone(), b.clone()]), Lia::and(vec![Lia::not(a), Lia::not(b)])]),
        }
    }
    pub fn forall(vs: Vec<String>, body: Lia) -> Lia {
        let fv = body.free_int_vars();
        let vs: Vec<String> = vs.into_iter().filter(|v| fv.contains(v)).collect();
        if vs.is_empty() {
            body
        } else {
            Lia::Forall(vs, Box::new(body))
        }
    }
    pub fn exists(vs: Vec<String>, body: Lia) -> Lia {
        let fv = body.free_int_vars();
        let vs: Vec<String> = vs.into_iter().filter(|v| fv.contains(v)).collect();
        if vs.is_empty() {
            body
        } else {
            Lia::Exists(vs, Box::new(body))
        }
    }

    pub fn children(&self) -> Vec<&Lia> {
        match self {
            Lia::Not(a) | Lia::Forall(_, a) | Lia::Exists(_, a) => vec![a],
            Lia::And(v) | Lia::Or(v) => v.iter().collect(),
            _ => vec![],
        }
    }

    pub fn free_int_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.fiv(&mut out);
        out
    }
    fn fiv(&self, out: &mut BTreeSet<String>) {
        match self {
            Lia::Atom(l, _) => out.extend(l.vars().cloned()),
            Lia::Forall(vs, b) | Lia::Exists(vs, b) => {
                for v in b.free_int_vars() {
                    if !vs.contains(&v) {
                        out.insert(v);
                    }
                }
            }
            _ => self.children().into_iter().for_each(|c| c.fiv(out)),
        }
    }
    pub fn bool_vars(&self, out: &mut BTreeSet<String>) {
        if let Lia::Bool(b) = self {
            out.insert(b.clone());
        }
        self.children().into_iter().for_each(|c| c.bool_vars(out));
    }
    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Lia::Forall(..) | Lia::Exists(..) => false,
            _ => self.children().iter().all(|c| c.is_quantifier_free()),
        }
    }
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Substitute integer variables by linear expressions. The substituted
    /// expressions must not mention variables bound inside `self`.
    pub fn subst(&self, map: &BTreeMap<String, Lin>) -> Lia {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Lia::Atom(l, c) => Lia::atom(l.subst(map), *c),
            Lia::True | Lia::False | Lia::Bool(_) => self.clone(),
            Lia::Not(a) => Lia::not(a.subst(map)),
            Lia::And(v) => Lia::and(v.iter().map(|c| c.subst(map)).collect()),
            Lia::Or(v) => Lia::or(v.iter().map(|c| c.subst(map)).collect()),
            Lia::Forall(vs, b) | Lia::Exists(vs, b) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(v);
                }
                let body = b.subst(&inner);
                if matches!(self, Lia::Forall(..)) {
                    Lia::forall(vs.clone(), body)
                } else {
                    Lia::exists(vs.clone(), body)
                }
            }
        }
    }

    /// Replace Boolean parameters by values.
    pub fn subst_bools(&self, vals: &BTreeMap<String, bool>) -> Lia {
        match self {
            Lia::Bool(b) => match vals.get(b) {
                Some(true) => Lia::True,
                Some(false) => Lia::False,
                None => self.clone(),
            },
            Lia::True | Lia::False | Lia::Atom(..) => self.clone(),
            Lia::Not(a) => Lia::not(a.subst_bools(vals)),
            Lia::And(v) => Lia::and(v.iter().map(|c| c.subst_bools(vals)).collect()),
            Lia::Or(v) => Lia::or(v.iter().map(|c| c.subst_bools(vals)).collect()),
            Lia::Forall(vs, b) => Lia::forall(vs.clone(), b.subst_bools(vals)),
            Lia::Exists(vs, b) => Lia::exists(vs.clone(), b.subst_bools(vals)),
        }
    }

    /// Evaluate a quantifier-free formula.
    pub fn eval(&self, ints: &BTreeMap<String, i64>, bools: &BTreeMap<String, bool>) -> Option<bool> {
        Some(match self {
            Lia::True => true,
            Lia::False => false,
            Lia::Atom(l, c) => {
                let v = l.eval(ints)?;
                match c {
                    Cmp::Eq => v == 0,
                    Cmp::Le => v <= 0,
                    Cmp::Lt => v < 0,
                }
            }
            Lia::Bool(b) => *bools.get(b)?,
            Lia::Not(a) => !a.eval(ints, bools)?,
            Lia::And(v) => {
                for c in v {
                    if !c.eval(ints, bools)? {
                        return Some(false);
                    }
                }
                true
            }
            Lia::Or(v) => {
                for c in v {
                    if c.eval(ints, bools)? {
                        return Some(true);
                    }
                }
                false
            }
            Lia::Forall(..) | Lia::Exists(..) => return None,
        })
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, l: &Lin, c: Cmp) -> fmt::Result {
    let mut lhs = Lin::cst(0);
    let mut rhs = Lin::cst(-l.konst);
    for (v, k) in &l.coeffs {
        if *k > 0 {
            lhs.coeffs.insert(v.clone(), *k);
        } else {
            rhs.coeffs.insert(v.clone(), -k);
        }
    }
    // Prefer `i >= 0` over `0 <= i` when the left side is empty.
    let op = match c {
        Cmp::Eq => "=",
        Cmp::Le => "<=",
        Cmp::Lt => "<",
    };
    if lhs.coeffs.is_empty() && c != Cmp::Eq {
        let flipped = if c == Cmp::Le { ">=" } else { ">" };
        return write!(f, "{rhs} {flipped} {lhs}");
    }
    if lhs.coeffs.is_empty() {
        return write!(f, "{rhs} = {lhs}");
    }
    write!(f, "{lhs} {op} {rhs}")
}

impl fmt::Display for Lia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let paren = |f: &mut fmt::Formatter<'_>, x: &Lia| -> fmt::Result {
            match x {
                Lia::And(_) | Lia::Or(_) | Lia::Forall(..) | Lia::Exists(..) => write!(f, "({x})"),
                _ => write!(f, "{x}"),
            }
        };
        match self {
            Lia::True => write!(f, "true"),
            Lia::False => write!(f, "false"),
            Lia::Atom(l, c) => write_atom(f, l, *c),
            Lia::Bool(b) => write!(f, "{b}"),
            Lia::Not(a) => {
                write!(f, "!")?;
                match a.as_ref() {
                    Lia::Bool(_) | Lia::True | Lia::False => write!(f, "{a}"),
                    _ => write!(f, "({a})"),
                }
            }
            Lia::And(v) | Lia::Or(v) => {
                let op = if matches!(self, Lia::And(_)) { " && " } else { " || " };
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    paren(f, c)?;
                }
                Ok(())
            }
            Lia::Forall(vs, b) | Lia::Exists(vs, b) => {
                let q = if matches!(self, Lia::Forall(..)) { "forall" } else { "exists" };
                write!(f, "{q} {}. {b}", vs.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("LIA syntax error in `{text}` at {pos}: {msg}")]
pub struct LiaParseError {
    pub text: String,
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum LTok {
    Id(String),
    Num(i64),
    Op(&'static str),
}

fn lex_lia(s: &str) -> Result<Vec<(LTok, usize)>, LiaParseError> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = vec![];
    const OPS: [&str; 17] = ["&&", "||", "=>", "<=", ">=", "!=", "!", "(", ")", "<", ">", "=", "+", "-", "*", ".", ","];
    'outer: while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let st = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n = s[st..i].parse().map_err(|_| LiaParseError { text: s.into(), pos: st, msg: "bad number".into() })?;
            out.push((LTok::Num(n), st));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let st = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            out.push((LTok::Id(s[st..i].to_string()), st));
            continue;
        }
        for op in OPS {
            if s[i..].starts_with(op) {
                out.push((LTok::Op(op), i));
                i += op.len();
                continue 'outer;
            }
        }
        return Err(LiaParseError { text: s.into(), pos: i, msg: format!("unexpected `{}`", c as char) });
    }
    Ok(out)
}

struct LP<'a> {
    toks: Vec<(LTok, usize)>,
    pos: usize,
    text: &'a str,
}

impl LP<'_> {
    fn peek(&self) -> Option<&LTok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }
    fn err<T>(&self, msg: &str) -> Result<T, LiaParseError> {
        let pos = self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.text.len());
        Err(LiaParseError { text: self.text.into(), pos, msg: msg.into() })
    }
    fn eat(&mut self, op: &str) -> bool {
        if self.peek() == Some(&LTok::Op(match op {
            "&&" => "&&",
            "||" => "||",
            "=>" => "=>",
            "(" => "(",
            ")" => ")",
            "!" => "!",
            "." => ".",
            "," => ",",
            "+" => "+",
            "-" => "-",
            "*" => "*",
            _ => return false,
        })) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
    fn formula(&mut self) -> Result<Lia, LiaParseError> {
        let a = self.disj()?;
        if self.eat("=>") {
            let b = self.formula()?;
            return Ok(Lia::implies(a, b));
        }
        Ok(a)
    }
    fn disj(&mut self) -> Result<Lia, LiaParseError> {
        let mut v = vec![self.conj()?];
        while self.eat("||") {
            v.push(self.conj()?);
        }
        Ok(Lia::or(v))
    }
    fn conj(&mut self) -> Result<Lia, LiaParseError> {
        let mut v = vec![self.unary()?];
        while self.eat("&&") {
            v.push(self.unary()?);
        }
        Ok(Lia::and(v))
    }
    fn unary(&mut self) -> Result<Lia, LiaParseError> {
        if self.eat("!") {
            return Ok(Lia::not(self.unary()?));
        }
        if self.eat("(") {
            let f = self.formula()?;
            if !self.eat(")") {
                return self.err("expected `)`");
            }
            return Ok(f);
        }
        if let Some(LTok::Id(w)) = self.peek().cloned() {
            match w.as_str() {
                "true" => {
                    self.pos += 1;
                    return Ok(Lia::True);
                }
                "false" => {
                    self.pos += 1;
                    return Ok(Lia::False);
                }
                "forall" | "exists" => {
                    self.pos += 1;
                    let mut vs = vec![];
                    loop {
                        match self.peek().cloned() {
                            Some(LTok::Id(v)) => {
                                self.pos += 1;
                                vs.push(v);
                            }
                            _ => return self.err("expected variable"),
                        }
                        if !self.eat(",") {
                            break;
                        }
                    }
                    if !self.eat(".") {
                        return self.err("expected `.`");
                    }
                    let body = self.formula()?;
                    return Ok(if w == "forall" { Lia::forall(vs, body) } else { Lia::exists(vs, body) });
                }
                _ => {
                    let next = self.toks.get(self.pos + 1).map(|t| &t.0);
                    let is_bool = matches!(next, None | Some(LTok::Op("&&" | "||" | ")" | "=>")));
                    if is_bool {
                        self.pos += 1;
                        return Ok(Lia::Bool(w));
                    }
                }
            }
        }
        let a = self.lin()?;
        let op = match self.peek() {
            Some(LTok::Op(o @ ("=" | "!=" | "<" | "<=" | ">" | ">="))) => *o,
            _ => return self.err("expected comparison"),
        };
        self.pos += 1;
        let b = self.lin()?;
        Ok(match op {
            "=" => Lia::eq(&a, &b),
            "!=" => Lia::not(Lia::eq(&a, &b)),
            "<" => Lia::lt(&a, &b),
            "<=" => Lia::le(&a, &b),
            ">" => Lia::lt(&b, &a),
            _ => Lia::le(&b, &a),
        })
    }
    fn lin(&mut self) -> Result<Lin, LiaParseError> {
        let mut neg = self.eat("-");
        let mut acc = Lin::cst(0);
        loop {
            let t = self.lin_term()?;
            acc = acc.add(&if neg { t.scale(-1) } else { t });
            if self.eat("+") {
                neg = false;
            } else if self.eat("-") {
                neg = true;
            } else {
                return Ok(acc);
            }
        }
    }
    fn lin_term(&mut self) -> Result<Lin, LiaParseError> {
        match self.peek().cloned() {
            Some(LTok::Num(n)) => {
                self.pos += 1;
                if self.eat("*") {
                    match self.peek().cloned() {
                        Some(LTok::Id(v)) => {
                            self.pos += 1;
                            Ok(Lin::var(&v).scale(n))
                        }
                        _ => self.err("expected variable after `*`"),
                    }
                } else {
                    Ok(Lin::cst(n))
                }
            }
            Some(LTok::Id(v)) => {
                self.pos += 1;
                Ok(Lin::var(&v))
            }
            _ => self.err("expected term"),
        }
    }
}

pub fn parse_lia(text: &str) -> Result<Lia, LiaParseError> {
    let toks = lex_lia(text)?;
    let mut p = LP { toks, pos: 0, text };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

pub fn parse_lin(text: &str) -> Result<Lin, LiaParseError> {
    let toks = lex_lia(text)?;
    let mut p = LP { toks, pos: 0, text };
    let l = p.lin()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(l)
}

fn smt_sym(v: &str) -> String {
    crate::solver::smtlib::symbol(v)
}

pub fn lin_smt(l: &Lin) -> String {
    let mut parts: Vec<String> = l
        .coeffs
        .iter()
        .map(|(v, c)| match c {
            1 => smt_sym(v),
            -1 => format!("(- {})", smt_sym(v)),
            c if *c < 0 => format!("(* (- {}) {})", -c, smt_sym(v)),
            c => format!("(* {} {})", c, smt_sym(v)),
        })
        .collect();
    if l.konst != 0 || parts.is_empty() {
        parts.push(if l.konst < 0 { format!("(- {})", -l.konst) } else { l.konst.to_string() });
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

pub fn to_smt(f: &Lia, out: &mut String) {
    use std::fmt::Write;
    match f {
        Lia::True => out.push_str("true"),
        Lia::False => out.push_str("false"),
        Lia::Bool(b) => out.push_str(&smt_sym(b)),
        Lia::Atom(l, c) => {
            // Move the constant to the right-hand side.
            let mut lhs = l.clone();
            let k = -lhs.konst;
            lhs.konst = 0;
            let op = match c {
                Cmp::Eq => "=",
                Cmp::Le => "<=",
                Cmp::Lt => "<",
            };
            let rhs = if k < 0 { format!("(- {})", -k) } else { k.to_string() };
            let _ = write!(out, "({op} {} {rhs})", lin_smt(&lhs));
        }
        Lia::Not(a) => {
            out.push_str("(not ");
            to_smt(a, out);
            out.push(')');
        }
        Lia::And(v) | Lia::Or(v) => {
            out.push_str(if matches!(f, Lia::And(_)) { "(and" } else { "(or" });
            for c in v {
                out.push(' ');
                to_smt(c, out);
            }
            out.push(')');
        }
        Lia::Forall(vs, b) | Lia::Exists(vs, b) => {
            let q = if matches!(f, Lia::Forall(..)) { "forall" } else { "exists" };
            let bs: Vec<String> = vs.iter().map(|v| format!("({} Int)", smt_sym(v))).collect();
            let _ = write!(out, "({q} ({}) ", bs.join(" "));
            to_smt(b, out);
            out.push(')');
        }
    }
}

#[derive(Debug, Error)]
pub enum LiaError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver could not decide the LIA query ({0})")]
    Undecided(String),
    #[error("unexpected solver output: {0}")]
    Protocol(String),
}

/// Values for free parameters of a satisfiable query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub ints: BTreeMap<String, i64>,
    pub bools: BTreeMap<String, bool>,
}

fn script(f: &Lia, timeout: Duration, want_values: bool) -> (String, Vec<String>) {
    let mut s = String::new();
    s.push_str(&format!("(set-option :timeout {})\n", timeout.as_millis().max(1)));
    let ints = f.free_int_vars();
    let mut bools = BTreeSet::new();
    f.bool_vars(&mut bools);
    for v in &ints {
        s.push_str(&format!("(declare-fun {} () Int)\n", smt_sym(v)));
    }
    for b in &bools {
        s.push_str(&format!("(declare-fun {} () Bool)\n", smt_sym(b)));
    }
    let mut body = String::new();
    to_smt(f, &mut body);
    s.push_str(&format!("(assert {body})\n(check-sat)\n(get-info :reason-unknown)\n"));
    let names: Vec<String> = ints.iter().chain(bools.iter()).cloned().collect();
    if want_values && !names.is_empty() {
        let ns: Vec<String> = names.iter().map(|n| smt_sym(n)).collect();
        s.push_str(&format!("(get-value ({}))\n", ns.join(" ")));
    }
    (s, names)
}

fn atom_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(v) if v.len() == 2 && v[0].atom() == Some("-") => atom_value(&v[1]).map(|n| -n),
        _ => None,
    }
}

/// Satisfiability of a formula whose free variables are read as
/// existentially quantified parameters. Returns `None` when the solver
/// gives up.
pub fn solve(solver: &Solver, f: &Lia, timeout: Duration) -> Result<Option<Option<Assignment>>, LiaError> {
    let (text, names) = script(f, timeout, true);
    let out = solver.run_script(&text, timeout, "lia")?;
    let items = parse_all(&out.stdout).map_err(|e| LiaError::Protocol(e.to_string()))?;
    match items.first().and_then(|s| s.atom()) {
        Some("unsat") => Ok(Some(None)),
        Some("sat") => {
            let mut a = Assignment::default();
            if !names.is_empty() {
                let vals = items
                    .iter()
                    .skip(1)
                    .find(|s| s.list().is_some_and(|v| v.iter().all(|p| p.list().is_some_and(|p| p.len() == 2))))
                    .ok_or_else(|| LiaError::Protocol("missing get-value output".into()))?;
                for pair in vals.list().unwrap() {
                    let p = pair.list().unwrap();
                    let name = p[0].atom().unwrap_or_default().to_string();
                    match p[1].atom() {
                        Some("true") => {
                            a.bools.insert(name, true);
                        }
                        Some("false") => {
                            a.bools.insert(name, false);
                        }
                        _ => {
                            let v = atom_value(&p[1]).ok_or_else(|| LiaError::Protocol(p[1].to_string()))?;
                            a.ints.insert(name, v);
                        }
                    }
                }
            }
            Ok(Some(Some(a)))
        }
        _ => Ok(None),
    }
}

/// Truth of a closed formula.
pub fn decide(solver: &Solver, f: &Lia, timeout: Duration) -> Result<bool, LiaError> {
    match f {
        Lia::True => return Ok(true),
        Lia::False => return Ok(false),
        _ => {}
    }
    match solve(solver, f, timeout)? {
        Some(Some(_)) => Ok(true),
        Some(None) => Ok(false),
        None => Err(LiaError::Undecided(format!("formula of size {}", f.size()))),
    }
}

/// Satisfiability of several formulas in one solver process, each with
/// its free variables read existentially. `None` where the solver gave up.
pub fn solve_batch(solver: &Solver, fs: &[Lia], timeout: Duration) -> Result<Vec<Option<bool>>, LiaError> {
    if fs.is_empty() {
        return Ok(vec![]);
    }
    let mut s = String::new();
    s.push_str(&format!("(set-option :timeout {})\n", timeout.as_millis().max(1)));
    for f in fs {
        s.push_str("(push 1)\n");
        let mut bools = BTreeSet::new();
        f.bool_vars(&mut bools);
        for v in f.free_int_vars() {
            s.push_str(&format!("(declare-fun {} () Int)\n", smt_sym(&v)));
        }
        for b in &bools {
            s.push_str(&format!("(declare-fun {} () Bool)\n", smt_sym(b)));
        }
        let mut body = String::new();
        to_smt(f, &mut body);
        s.push_str(&format!("(assert {body})\n(check-sat)\n(pop 1)\n"));
    }
    let out = solver.run_script(&s, timeout * fs.len().min(64) as u32, "lia-batch")?;
    let items = parse_all(&out.stdout).map_err(|e| LiaError::Protocol(e.to_string()))?;
    let mut res: Vec<Option<bool>> = items
        .iter()
        .map(|x| match x.atom() {
            Some("sat") => Some(true),
            Some("unsat") => Some(false),
            _ => None,
        })
        .collect();
    res.resize(fs.len(), None);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for s in ["i >= 0", "i = 0", "i1 <= i2 - 1 && i3 >= 2", "b_1 || !(i = 3)", "forall j. j >= i || j < i"] {
            let f = parse_lia(s).unwrap();
            let g = parse_lia(&f.to_string()).unwrap();
            assert_eq!(f, g, "{s} -> {f}");
        }
    }

    #[test]
    fn constant_atoms_fold() {
        assert_eq!(Lia::le(&Lin::cst(1), &Lin::cst(2)), Lia::True);
        assert_eq!(Lia::eq(&Lin::var("i"), &Lin::var("i")), Lia::True);
        assert_eq!(Lia::lt(&Lin::var("i"), &Lin::var("i")), Lia::False);
    }

    #[test]
    fn eval_quantifier_free() {
        let f = parse_lia("i1 <= i2 && i2 < 5").unwrap();
        let env = BTreeMap::from([("i1".to_string(), 1), ("i2".to_string(), 4)]);
        assert_eq!(f.eval(&env, &BTreeMap::new()), Some(true));
    }
}
