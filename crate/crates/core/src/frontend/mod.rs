//! Concrete syntax: parsing, elaboration and printing of entailment problems.

mod elab;
mod lexer;
mod parser;
mod print;
mod surface;

pub use elab::{into_cases, is_reserved};
pub use print::{print_def, print_problem, Pretty};

use crate::sl::{Problem, Span};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// A located front-end error, printed as `file:line:col: message`.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: String,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(file: &str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { file: file.to_string(), span, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.span.line, self.span.col, self.message)
    }
}

pub fn parse_problem(src: &str, file: &str) -> Result<Problem, Diagnostic> {
    let toks = lexer::lex(src, file)?;
    let sf = parser::Parser::new(toks, file).file()?;
    elab::elaborate(file, &sf)
}

pub fn parse_file(path: &Path) -> Result<Problem, Diagnostic> {
    let name = path.display().to_string();
    let src = std::fs::read_to_string(path)
        .map_err(|e| Diagnostic::new(&name, Span { line: 0, col: 0 }, format!("cannot read file: {e}")))?;
    parse_problem(&src, &name)
}
