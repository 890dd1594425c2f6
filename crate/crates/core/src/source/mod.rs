//! Frontend for the analyzed `.mj` language subset.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod program;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use parser::{parse_expr, parse_unit};
pub use printer::{print_expr, print_unit};
pub use program::{resolve_program, ModelField, Program, ProgramError, SourceFile};

/// Byte range plus the 1-based position of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(lo: usize, hi: usize, line: u32, col: u32) -> Self {
        Span { lo, hi, line, col }
    }

    /// From the start of `self` to the end of `other`.
    pub fn to(self, other: Span) -> Span {
        Span { hi: other.hi.max(self.lo), ..self }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceErrorKind {
    Lexical,
    Syntax,
    /// Names the construct outside the supported subset.
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{}: {}", .file.as_ref().map(|f| format!("{}:", f)).unwrap_or_default(), .span, .message)]
pub struct SourceError {
    pub kind: SourceErrorKind,
    pub span: Span,
    pub message: String,
    pub file: Option<String>,
}

impl SourceError {
    pub fn lexical(span: Span, message: impl Into<String>) -> Self {
        SourceError { kind: SourceErrorKind::Lexical, span, message: message.into(), file: None }
    }

    pub fn syntax(span: Span, message: impl Into<String>) -> Self {
        SourceError { kind: SourceErrorKind::Syntax, span, message: message.into(), file: None }
    }

    pub fn unsupported(span: Span, construct: &str) -> Self {
        SourceError {
            kind: SourceErrorKind::Unsupported(construct.to_string()),
            span,
            message: format!("unsupported construct: {}", construct),
            file: None,
        }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }
}
