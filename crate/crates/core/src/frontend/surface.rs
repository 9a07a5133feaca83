//! Untyped syntax tree produced by the parser.

use crate::sl::Span;

#[derive(Debug, Clone)]
pub enum STerm {
    Ident(String, Span),
    Int(i64, Span),
    Add(Box<STerm>, Box<STerm>),
}

impl STerm {
    pub fn span(&self) -> Span {
        match self {
            STerm::Ident(_, s) | STerm::Int(_, s) => *s,
            STerm::Add(a, _) => a.span(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone)]
pub enum SForm {
    Cmp(CmpOp, STerm, STerm, Span),
    Emp,
    PointsTo(STerm, String, Vec<STerm>, Span),
    Pred(String, Vec<STerm>, Span),
    Or(Vec<SForm>),
    And(Vec<SForm>),
    Sep(Vec<SForm>),
    Exists(Vec<(String, Span)>, Box<SForm>),
    Forall(Vec<(String, Span)>, Box<SForm>),
    Implies(Box<SForm>, Box<SForm>),
}

#[derive(Debug, Clone)]
pub struct SData {
    pub name: String,
    pub fields: Vec<(String, String, Span)>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct SPred {
    pub name: String,
    pub params: Vec<(String, Span)>,
    pub body: SForm,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct SFile {
    pub datas: Vec<SData>,
    pub preds: Vec<SPred>,
    pub antecedents: Vec<(SForm, Span)>,
    pub consequent: (SForm, Span),
}
