//! Minimal S-expression reader for solver output.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) => Some(s),
            _ => None,
        }
    }
    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v) => Some(v),
            _ => None,
        }
    }
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|v| v.first()).and_then(|h| h.atom())
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s) => write!(f, "{s}"),
            Sexp::Str(s) => write!(f, "\"{s}\""),
            Sexp::List(v) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed s-expression at byte {pos}: {msg}")]
pub struct SexpError {
    pub pos: usize,
    pub msg: String,
}

/// Parse all top-level S-expressions in `src`. Quoted symbols `|a b|` are
/// returned as atoms without the bars.
pub fn parse_all(src: &str) -> Result<Vec<Sexp>, SexpError> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut stack: Vec<Vec<Sexp>> = vec![vec![]];
    while i < b.len() {
        let c = b[i];
        match c {
            b';' => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push(vec![]);
                i += 1;
            }
            b')' => {
                if stack.len() < 2 {
                    return Err(SexpError { pos: i, msg: "unbalanced `)`".into() });
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Sexp::List(done));
                i += 1;
            }
            b'"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= b.len() {
                        return Err(SexpError { pos: i, msg: "unterminated string".into() });
                    }
                    if b[i] == b'"' {
                        if b.get(i + 1) == Some(&b'"') {
                            s.push('"');
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    s.push(b[i] as char);
                    i += 1;
                }
                stack.last_mut().unwrap().push(Sexp::Str(s));
            }
            b'|' => {
                let start = i + 1;
                i += 1;
                while i < b.len() && b[i] != b'|' {
                    i += 1;
                }
                if i >= b.len() {
                    return Err(SexpError { pos: start, msg: "unterminated quoted symbol".into() });
                }
                stack.last_mut().unwrap().push(Sexp::Atom(src[start..i].to_string()));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < b.len() && !b[i].is_ascii_whitespace() && !matches!(b[i], b'(' | b')' | b';' | b'"' | b'|') {
                    i += 1;
                }
                stack.last_mut().unwrap().push(Sexp::Atom(src[start..i].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SexpError { pos: b.len(), msg: "unbalanced `(`".into() });
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_and_quoted_symbols() {
        let v = parse_all("sat\n(model (define-fun |a b| () Int (- 3)))").unwrap();
        assert_eq!(v[0], Sexp::Atom("sat".into()));
        assert_eq!(v[1].to_string(), "(model (define-fun a b () Int (- 3)))");
    }

    #[test]
    fn unbalanced_is_an_error() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
