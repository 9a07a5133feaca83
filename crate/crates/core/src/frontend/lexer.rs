use super::Diagnostic;
use crate::sl::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Dot,
    Define,
    Turnstile,
    Or,
    And,
    Star,
    Arrow,
    Implies,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Define => ":=",
            Tok::Turnstile => "|-",
            Tok::Or => "\\/",
            Tok::And => "&",
            Tok::Star => "*",
            Tok::Arrow => "->",
            Tok::Implies => "=>",
            Tok::Eq => "=",
            Tok::Neq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Eof => return write!(f, "end of input"),
        };
        write!(f, "`{s}`")
    }
}

pub fn lex(src: &str, file: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = vec![];
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| Diagnostic::new(file, Span { line, col }, msg);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let adv = |i: &mut usize, col: &mut usize, n: usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(&mut i, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            if word.starts_with('_') {
                return Err(err(span.line, span.col, format!("identifier `{word}` may not start with `_`")));
            }
            out.push((Tok::Ident(word), span));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let n = word
                .parse::<i64>()
                .map_err(|_| err(span.line, span.col, format!("integer literal `{word}` out of range")))?;
            out.push((Tok::Int(n), span));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let tok2 = match two.as_str() {
            ":=" => Some(Tok::Define),
            "|-" => Some(Tok::Turnstile),
            "\\/" => Some(Tok::Or),
            "->" => Some(Tok::Arrow),
            "=>" => Some(Tok::Implies),
            "!=" => Some(Tok::Neq),
            "<=" => Some(Tok::Le),
            ">=" => Some(Tok::Ge),
            _ => None,
        };
        if let Some(t) = tok2 {
            out.push((t, span));
            adv(&mut i, &mut col, 2);
            continue;
        }
        let tok1 = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '&' => Tok::And,
            '*' => Tok::Star,
            '=' => Tok::Eq,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            _ => return Err(err(line, col, format!("unexpected character `{c}`"))),
        };
        out.push((tok1, span));
        adv(&mut i, &mut col, 1);
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}
