//! Name resolution, sort inference and conversion of definitions into
//! case form.

use super::surface::*;
use super::Diagnostic;
use crate::sl::*;
use std::collections::{BTreeMap, BTreeSet};

const RESERVED: &[&str] = &[
    "data", "pred", "checkentail", "exists", "forall", "emp", "nil", "int", "and", "or", "not", "ite", "let", "true",
    "false", "distinct", "Int", "Bool", "Loc", "xor", "assert", "declare", "select", "store",
];

pub fn is_reserved(name: &str) -> bool {
    if RESERVED.contains(&name) || name.ends_with("_fo") || name.ends_with("_eta") {
        return true;
    }
    if let Some(rest) = name.strip_prefix("m_") {
        return !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit());
    }
    false
}

#[derive(Debug, Clone)]
enum RTerm {
    Slot(usize),
    Nil,
    Int(i64),
    Add(Box<RTerm>, Box<RTerm>),
}

#[derive(Debug, Clone)]
enum RForm {
    Eq(RTerm, RTerm),
    Neq(RTerm, RTerm),
    Lt(RTerm, RTerm),
    NotLt(RTerm, RTerm),
    Emp,
    Pto(RTerm, Vec<RTerm>),
    Pred(String, Vec<RTerm>),
    Or(Vec<RForm>),
    And(Vec<RForm>),
    Sep(Vec<RForm>),
    Exists(Vec<usize>, Box<RForm>),
    Forall(Vec<usize>, Box<RForm>),
    Implies(Box<RForm>, Box<RForm>),
}

#[derive(Clone, Copy)]
enum SV {
    Known(Sort),
    Slot(usize),
}

struct Slots {
    parent: Vec<usize>,
    sort: Vec<Option<Sort>>,
    name: Vec<String>,
    is_const: Vec<bool>,
}

impl Slots {
    fn fresh(&mut self, name: &str, is_const: bool) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.sort.push(None);
        self.name.push(name.to_string());
        self.is_const.push(is_const);
        id
    }
    fn find(&mut self, a: usize) -> usize {
        let p = self.parent[a];
        if p == a {
            return a;
        }
        let r = self.find(p);
        self.parent[a] = r;
        r
    }
    fn sort_of(&mut self, a: usize) -> Option<Sort> {
        let r = self.find(a);
        self.sort[r]
    }
}

struct Elab<'a> {
    file: &'a str,
    slots: Slots,
    shape: Option<RecordShape>,
    pred_params: BTreeMap<String, Vec<usize>>,
    consts: BTreeMap<String, usize>,
    scope: Vec<(String, usize)>,
    in_query: bool,
}

type EResult<T> = Result<T, Diagnostic>;

impl<'a> Elab<'a> {
    fn err<T>(&self, span: Span, msg: impl Into<String>) -> EResult<T> {
        Err(Diagnostic::new(self.file, span, msg))
    }

    fn unify(&mut self, a: SV, b: SV, span: Span) -> EResult<()> {
        match (a, b) {
            (SV::Known(x), SV::Known(y)) => {
                if x != y {
                    return self.err(span, format!("sort mismatch: {x} vs {y}"));
                }
                Ok(())
            }
            (SV::Known(s), SV::Slot(i)) | (SV::Slot(i), SV::Known(s)) => {
                let r = self.slots.find(i);
                match self.slots.sort[r] {
                    Some(t) if t != s => {
                        let n = self.slots.name[i].clone();
                        self.err(span, format!("sort mismatch: `{n}` is {t} but used as {s}"))
                    }
                    _ => {
                        self.slots.sort[r] = Some(s);
                        Ok(())
                    }
                }
            }
            (SV::Slot(i), SV::Slot(j)) => {
                let (ri, rj) = (self.slots.find(i), self.slots.find(j));
                if ri == rj {
                    return Ok(());
                }
                match (self.slots.sort[ri], self.slots.sort[rj]) {
                    (Some(x), Some(y)) if x != y => {
                        let (n, m) = (self.slots.name[i].clone(), self.slots.name[j].clone());
                        self.err(span, format!("sort mismatch: `{n}` is {x} but `{m}` is {y}"))
                    }
                    (sx, sy) => {
                        self.slots.parent[ri] = rj;
                        self.slots.sort[rj] = sx.or(sy);
                        Ok(())
                    }
                }
            }
        }
    }

    fn bind(&mut self, name: &str, span: Span) -> EResult<usize> {
        if is_reserved(name) {
            return self.err(span, format!("`{name}` is a reserved name"));
        }
        let id = self.slots.fresh(name, false);
        self.scope.push((name.to_string(), id));
        Ok(id)
    }

    fn term(&mut self, t: &STerm) -> EResult<(RTerm, SV)> {
        match t {
            STerm::Int(n, _) => Ok((RTerm::Int(*n), SV::Known(Sort::Int))),
            STerm::Add(a, b) => {
                let (ra, sa) = self.term(a)?;
                let (rb, sb) = self.term(b)?;
                self.unify(sa, SV::Known(Sort::Int), a.span())?;
                self.unify(sb, SV::Known(Sort::Int), b.span())?;
                Ok((RTerm::Add(Box::new(ra), Box::new(rb)), SV::Known(Sort::Int)))
            }
            STerm::Ident(name, span) => {
                if name == NIL {
                    return Ok((RTerm::Nil, SV::Known(Sort::Loc)));
                }
                if let Some((_, id)) = self.scope.iter().rev().find(|(n, _)| n == name) {
                    return Ok((RTerm::Slot(*id), SV::Slot(*id)));
                }
                if !self.in_query {
                    return self.err(*span, format!("unbound variable `{name}`"));
                }
                if is_reserved(name) {
                    return self.err(*span, format!("`{name}` is a reserved name"));
                }
                let id = match self.consts.get(name) {
                    Some(id) => *id,
                    None => {
                        let id = self.slots.fresh(name, true);
                        self.consts.insert(name.clone(), id);
                        id
                    }
                };
                Ok((RTerm::Slot(id), SV::Slot(id)))
            }
        }
    }

    fn formula(&mut self, f: &SForm) -> EResult<RForm> {
        Ok(match f {
            SForm::Emp => RForm::Emp,
            SForm::Cmp(op, a, b, span) => {
                let (ra, sa) = self.term(a)?;
                let (rb, sb) = self.term(b)?;
                match op {
                    CmpOp::Eq | CmpOp::Neq => self.unify(sa, sb, *span)?,
                    _ => {
                        self.unify(sa, SV::Known(Sort::Int), a.span())?;
                        self.unify(sb, SV::Known(Sort::Int), b.span())?;
                    }
                }
                match op {
                    CmpOp::Eq => RForm::Eq(ra, rb),
                    CmpOp::Neq => RForm::Neq(ra, rb),
                    CmpOp::Lt => RForm::Lt(ra, rb),
                    CmpOp::Gt => RForm::Lt(rb, ra),
                    CmpOp::Ge => RForm::NotLt(ra, rb),
                    CmpOp::Le => RForm::NotLt(rb, ra),
                }
            }
            SForm::PointsTo(base, ty, fields, span) => {
                let shape = match &self.shape {
                    Some(s) => s.clone(),
                    None => return self.err(*span, "points-to without a data declaration"),
                };
                if *ty != shape.type_name {
                    return self.err(*span, format!("unknown record type `{ty}`, expected `{}`", shape.type_name));
                }
                if fields.len() != shape.arity() {
                    return self.err(
                        *span,
                        format!("record `{ty}` has {} fields, {} given", shape.arity(), fields.len()),
                    );
                }
                let (rb, sb) = self.term(base)?;
                self.unify(sb, SV::Known(Sort::Loc), base.span())?;
                let mut rs = vec![];
                for (t, (_, s)) in fields.iter().zip(&shape.fields) {
                    let (rt, st) = self.term(t)?;
                    self.unify(st, SV::Known(*s), t.span())?;
                    rs.push(rt);
                }
                RForm::Pto(rb, rs)
            }
            SForm::Pred(name, args, span) => {
                let params = match self.pred_params.get(name) {
                    Some(p) => p.clone(),
                    None => return self.err(*span, format!("undefined predicate `{name}`")),
                };
                if params.len() != args.len() {
                    return self.err(
                        *span,
                        format!("predicate `{name}` takes {} arguments, {} given", params.len(), args.len()),
                    );
                }
                let mut rs = vec![];
                for (t, p) in args.iter().zip(params) {
                    let (rt, st) = self.term(t)?;
                    self.unify(st, SV::Slot(p), t.span())?;
                    rs.push(rt);
                }
                RForm::Pred(name.clone(), rs)
            }
            SForm::Or(v) => RForm::Or(v.iter().map(|c| self.formula(c)).collect::<EResult<_>>()?),
            SForm::And(v) => RForm::And(v.iter().map(|c| self.formula(c)).collect::<EResult<_>>()?),
            SForm::Sep(v) => RForm::Sep(v.iter().map(|c| self.formula(c)).collect::<EResult<_>>()?),
            SForm::Exists(vs, b) | SForm::Forall(vs, b) => {
                let depth = self.scope.len();
                let ids = vs.iter().map(|(n, s)| self.bind(n, *s)).collect::<EResult<Vec<_>>>()?;
                let body = Box::new(self.formula(b)?);
                self.scope.truncate(depth);
                if matches!(f, SForm::Exists(..)) {
                    RForm::Exists(ids, body)
                } else {
                    RForm::Forall(ids, body)
                }
            }
            SForm::Implies(a, b) => RForm::Implies(Box::new(self.formula(a)?), Box::new(self.formula(b)?)),
        })
    }

    fn symbol(&mut self, id: usize) -> Symbol {
        let sort = self.slots.sort_of(id).unwrap_or(Sort::Loc);
        Symbol::new(self.slots.name[id].clone(), sort)
    }

    fn lower_term(&mut self, t: &RTerm) -> Term {
        match t {
            RTerm::Nil => Term::nil(),
            RTerm::Int(n) => Term::Int(*n),
            RTerm::Add(a, b) => Term::add(self.lower_term(a), self.lower_term(b)),
            RTerm::Slot(id) => {
                let s = self.symbol(*id);
                if self.slots.is_const[*id] {
                    Term::Const(s)
                } else {
                    Term::Var(s)
                }
            }
        }
    }

    fn lower(&mut self, f: &RForm) -> Formula {
        match f {
            RForm::Eq(a, b) => Formula::Eq(self.lower_term(a), self.lower_term(b)),
            RForm::Neq(a, b) => Formula::Neq(self.lower_term(a), self.lower_term(b)),
            RForm::Lt(a, b) => Formula::Lt(self.lower_term(a), self.lower_term(b)),
            RForm::NotLt(a, b) => Formula::NotLt(self.lower_term(a), self.lower_term(b)),
            RForm::Emp => Formula::Emp,
            RForm::Pto(t, ts) => {
                let base = self.lower_term(t);
                Formula::PointsTo(base, ts.iter().map(|t| self.lower_term(t)).collect())
            }
            RForm::Pred(p, ts) => Formula::Pred(p.clone(), ts.iter().map(|t| self.lower_term(t)).collect()),
            RForm::Or(v) => Formula::or(v.iter().map(|c| self.lower(c)).collect()),
            RForm::And(v) => Formula::and(v.iter().map(|c| self.lower(c)).collect()),
            RForm::Sep(v) => Formula::sep(v.iter().map(|c| self.lower(c)).collect()),
            RForm::Exists(ids, b) => {
                let vs = ids.iter().map(|i| self.symbol(*i)).collect();
                Formula::exists(vs, self.lower(b))
            }
            RForm::Forall(ids, b) => {
                let vs = ids.iter().map(|i| self.symbol(*i)).collect();
                Formula::forall(vs, self.lower(b))
            }
            RForm::Implies(a, b) => Formula::implies(self.lower(a), self.lower(b)),
        }
    }
}

fn shape_of(file: &str, datas: &[SData]) -> Result<Option<RecordShape>, Diagnostic> {
    if datas.len() > 1 {
        return Err(Diagnostic::new(file, datas[1].span, "multiple record shapes: only one data declaration is allowed"));
    }
    let Some(d) = datas.first() else { return Ok(None) };
    let mut fields = vec![];
    let mut seen = BTreeSet::new();
    for (ty, name, span) in &d.fields {
        let sort = if ty == "int" {
            Sort::Int
        } else if *ty == d.name {
            Sort::Loc
        } else {
            return Err(Diagnostic::new(file, *span, format!("unknown field type `{ty}`")));
        };
        if !seen.insert(name.clone()) {
            return Err(Diagnostic::new(file, *span, format!("duplicate field `{name}`")));
        }
        fields.push((name.clone(), sort));
    }
    Ok(Some(RecordShape { type_name: d.name.clone(), fields }))
}

pub fn elaborate(file: &str, sf: &SFile) -> Result<Problem, Diagnostic> {
    let shape = shape_of(file, &sf.datas)?;
    let mut e = Elab {
        file,
        slots: Slots { parent: vec![], sort: vec![], name: vec![], is_const: vec![] },
        shape: shape.clone(),
        pred_params: BTreeMap::new(),
        consts: BTreeMap::new(),
        scope: vec![],
        in_query: false,
    };
    for p in &sf.preds {
        if is_reserved(&p.name) {
            return e.err(p.span, format!("`{}` is a reserved name", p.name));
        }
        if e.pred_params.contains_key(&p.name) {
            return e.err(p.span, format!("predicate `{}` defined twice", p.name));
        }
        let mut ids = vec![];
        let mut seen = BTreeSet::new();
        for (n, s) in &p.params {
            if is_reserved(n) {
                return e.err(*s, format!("`{n}` is a reserved name"));
            }
            if !seen.insert(n.clone()) {
                return e.err(*s, format!("duplicate parameter `{n}`"));
            }
            ids.push(e.slots.fresh(n, false));
        }
        e.pred_params.insert(p.name.clone(), ids);
    }
    let mut bodies = vec![];
    for p in &sf.preds {
        let ids = e.pred_params[&p.name].clone();
        e.scope = p.params.iter().map(|(n, _)| n.clone()).zip(ids).collect();
        bodies.push(e.formula(&p.body)?);
    }
    e.scope.clear();
    e.in_query = true;
    let ants = sf.antecedents.iter().map(|(f, _)| e.formula(f)).collect::<EResult<Vec<_>>>()?;
    let cons = e.formula(&sf.consequent.0)?;

    let mut vocab = Vocabulary::new(shape.unwrap_or_default());
    let mut sid = Sid::default();
    let mut spans = ProblemSpans::default();
    for (p, body) in sf.preds.iter().zip(&bodies) {
        let params: Vec<Symbol> = e.pred_params[&p.name].clone().into_iter().map(|i| e.symbol(i)).collect();
        vocab.preds.insert(p.name.clone(), params.iter().map(|s| s.sort).collect());
        let body = e.lower(body);
        let (exists, cases) = into_cases(&params, &body).map_err(|m| Diagnostic::new(file, p.span, m))?;
        sid.insert(PredDef { name: p.name.clone(), params, exists, cases });
        spans.preds.insert(p.name.clone(), p.span);
    }
    let consts: Vec<(String, usize)> = e.consts.iter().map(|(n, i)| (n.clone(), *i)).collect();
    for (n, id) in consts {
        let s = e.symbol(id);
        vocab.constants.insert(n, s.sort);
    }
    let antecedents = ants.iter().map(|f| e.lower(f)).collect();
    let consequent = e.lower(&cons);
    spans.antecedents = sf.antecedents.iter().map(|(_, s)| *s).collect();
    spans.consequent = sf.consequent.1;
    Ok(Problem { vocab, sid, antecedents, consequent, spans })
}

/// Lift existentials out of a definition body and distribute disjunction,
/// giving `exists y. rho_1 \/ ... \/ rho_m` with conjunctive cases.
pub fn into_cases(params: &[Symbol], body: &Formula) -> Result<(Vec<Symbol>, Vec<Formula>), String> {
    let mut taken: BTreeSet<String> = params.iter().map(|p| p.name.clone()).collect();
    let ds = dnf(body, &mut taken)?;
    let mut exists = vec![];
    let mut cases = vec![];
    for (vs, f) in ds {
        for v in vs {
            if !exists.contains(&v) {
                exists.push(v);
            }
        }
        cases.push(f);
    }
    Ok((exists, cases))
}

fn dnf(f: &Formula, taken: &mut BTreeSet<String>) -> Result<Vec<(Vec<Symbol>, Formula)>, String> {
    Ok(match f {
        Formula::Or(v) => {
            let mut out = vec![];
            for c in v {
                out.extend(dnf(c, taken)?);
            }
            out
        }
        Formula::And(v) | Formula::Sep(v) => {
            let is_sep = matches!(f, Formula::Sep(_));
            let mut acc: Vec<(Vec<Symbol>, Vec<Formula>)> = vec![(vec![], vec![])];
            for c in v {
                let ds = dnf(c, taken)?;
                let mut next = vec![];
                for (vs, parts) in &acc {
                    for (ws, g) in &ds {
                        let mut vs2 = vs.clone();
                        vs2.extend(ws.iter().cloned());
                        let mut p2 = parts.clone();
                        p2.push(g.clone());
                        next.push((vs2, p2));
                    }
                }
                acc = next;
            }
            acc.into_iter()
                .map(|(vs, parts)| (vs, if is_sep { Formula::sep(parts) } else { Formula::and(parts) }))
                .collect()
        }
        Formula::Exists(vs, b) => {
            let mut map = BTreeMap::new();
            let mut fresh = vec![];
            for v in vs {
                let mut name = v.name.clone();
                while taken.contains(&name) {
                    name.push('\'');
                }
                taken.insert(name.clone());
                if name != v.name {
                    map.insert(v.name.clone(), Term::Var(Symbol::new(name.clone(), v.sort)));
                }
                fresh.push(Symbol::new(name, v.sort));
            }
            let body = b.subst(&map);
            dnf(&body, taken)?
                .into_iter()
                .map(|(ws, g)| {
                    let mut all = fresh.clone();
                    all.extend(ws);
                    (all, g)
                })
                .collect()
        }
        Formula::Forall(..) => return Err("universal quantifier in a predicate definition".into()),
        Formula::Implies(..) => return Err("implication in a predicate definition".into()),
        atom => vec![(vec![], atom.clone())],
    })
}
