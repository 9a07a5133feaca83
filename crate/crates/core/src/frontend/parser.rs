use super::lexer::Tok;
use super::surface::*;
use super::Diagnostic;
use crate::sl::Span;

pub struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    file: &'a str,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    pub fn new(toks: Vec<(Tok, Span)>, file: &'a str) -> Self {
        Parser { toks, pos: 0, file }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }
    fn span(&self) -> Span {
        self.toks[self.pos].1
    }
    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(self.file, self.span(), msg))
    }
    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            self.error(format!("expected {t}, found {}", self.peek()))
        }
    }
    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            t => self.error(format!("expected identifier, found {t}")),
        }
    }
    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn file(&mut self) -> PResult<SFile> {
        let mut datas = vec![];
        let mut preds = vec![];
        loop {
            if self.is_kw("data") {
                datas.push(self.data()?);
            } else if self.is_kw("pred") {
                preds.push(self.pred()?);
            } else if self.is_kw("checkentail") {
                break;
            } else {
                return self.error("expected data/pred/checkentail");
            }
        }
        self.bump();
        let mut antecedents = vec![];
        loop {
            let sp = self.span();
            antecedents.push((self.formula()?, sp));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::Turnstile)?;
        let sp = self.span();
        let consequent = (self.formula()?, sp);
        self.expect(Tok::Semi)?;
        if *self.peek() != Tok::Eof {
            return self.error(format!("unexpected {} after the query", self.peek()));
        }
        Ok(SFile { datas, preds, antecedents, consequent })
    }

    fn data(&mut self) -> PResult<SData> {
        let span = self.bump().1;
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut fields = vec![];
        while *self.peek() != Tok::RBrace {
            let (ty, sp) = self.ident()?;
            let (f, _) = self.ident()?;
            self.expect(Tok::Semi)?;
            fields.push((ty, f, sp));
        }
        self.bump();
        self.expect(Tok::Semi)?;
        Ok(SData { name, fields, span })
    }

    fn pred(&mut self) -> PResult<SPred> {
        self.bump();
        let (name, span) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = vec![];
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Define)?;
        let body = self.formula()?;
        self.expect(Tok::Semi)?;
        Ok(SPred { name, params, body, span })
    }

    pub fn formula(&mut self) -> PResult<SForm> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.formula()?;
            return Ok(SForm::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<SForm> {
        let mut parts = vec![self.conj()?];
        while *self.peek() == Tok::Or {
            self.bump();
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { SForm::Or(parts) })
    }

    fn conj(&mut self) -> PResult<SForm> {
        let mut parts = vec![self.sep()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.sep()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { SForm::And(parts) })
    }

    fn sep(&mut self) -> PResult<SForm> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::Star {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { SForm::Sep(parts) })
    }

    fn unary(&mut self) -> PResult<SForm> {
        if self.is_kw("exists") || self.is_kw("forall") {
            let is_ex = self.is_kw("exists");
            self.bump();
            let mut vars = vec![self.ident()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                vars.push(self.ident()?);
            }
            self.expect(Tok::Dot)?;
            let body = Box::new(self.formula()?);
            return Ok(if is_ex { SForm::Exists(vars, body) } else { SForm::Forall(vars, body) });
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        if self.is_kw("emp") {
            self.bump();
            return Ok(SForm::Emp);
        }
        if let (Tok::Ident(name), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            let span = self.bump().1;
            self.bump();
            let args = self.term_list(Tok::RParen)?;
            return Ok(SForm::Pred(name, args, span));
        }
        let span = self.span();
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::Arrow => {
                self.bump();
                let (ty, _) = self.ident()?;
                self.expect(Tok::LBrace)?;
                let fields = self.term_list(Tok::RBrace)?;
                return Ok(SForm::PointsTo(lhs, ty, fields, span));
            }
            Tok::Eq => CmpOp::Eq,
            Tok::Neq => CmpOp::Neq,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            t => return self.error(format!("expected `->` or a comparison, found {t}")),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(SForm::Cmp(op, lhs, rhs, span))
    }

    fn term_list(&mut self, close: Tok) -> PResult<Vec<STerm>> {
        let mut out = vec![];
        if *self.peek() != close {
            loop {
                out.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(close)?;
        Ok(out)
    }

    fn term(&mut self) -> PResult<STerm> {
        let mut t = self.primary()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let r = self.primary()?;
                    t = STerm::Add(Box::new(t), Box::new(r));
                }
                Tok::Minus => {
                    self.bump();
                    match self.peek().clone() {
                        Tok::Int(n) => {
                            let sp = self.bump().1;
                            t = STerm::Add(Box::new(t), Box::new(STerm::Int(-n, sp)));
                        }
                        _ => return self.error("only integer literals may be subtracted"),
                    }
                }
                _ => return Ok(t),
            }
        }
    }

    fn primary(&mut self) -> PResult<STerm> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().1;
                Ok(STerm::Ident(s, sp))
            }
            Tok::Int(n) => {
                let sp = self.bump().1;
                Ok(STerm::Int(n, sp))
            }
            Tok::Minus => {
                let sp = self.bump().1;
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(STerm::Int(-n, sp))
                    }
                    _ => self.error("expected integer literal after unary `-`"),
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            t => self.error(format!("expected a term, found {t}")),
        }
    }
}
