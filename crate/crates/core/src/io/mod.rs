//! Domain and problem language, pretty-printer, classifier and plan output.

mod classify;
mod parse;
mod print;
mod serialize;
pub mod sexp;

use std::fmt;

use thiserror::Error;

pub use classify::{classify_domain, CompoundSetting, DomainClass, OrderingSetting};
pub use parse::{load_problem, parse_domain, parse_problem};
pub use print::{print_domain, print_problem};
pub use serialize::{parse_plan_json, parse_plan_text, plan_document, serialize_plan, PlanFormat, SolutionInfo};

/// 1-based position of a piece of input text.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(file: &str, line: usize, column: usize, length: usize) -> Self {
        SourceSpan { file: file.to_owned(), line, column, length: length.max(1) }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Lexical,
    Syntax,
    Arity,
    /// A primitive name without `!`, or a compound name with one.
    Namespace,
    UnsafeNegation,
    /// Reference to an undeclared predicate, task, label or domain.
    Unknown,
    /// A variable where only ground facts are allowed.
    Ground,
    /// A variable that nothing binds.
    Variable,
    /// The same fact both added and deleted.
    Effect,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Lexical => "lexical error",
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Arity => "arity error",
            ErrorKind::Namespace => "namespace error",
            ErrorKind::UnsafeNegation => "unsafe negation",
            ErrorKind::Unknown => "unknown name",
            ErrorKind::Ground => "not ground",
            ErrorKind::Variable => "unbound variable",
            ErrorKind::Effect => "conflicting effects",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: ErrorKind, span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError { kind, span, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseErrors(pub Vec<ParseError>);

impl ParseErrors {
    pub fn first(&self) -> &ParseError {
        &self.0[0]
    }
}

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl From<ParseError> for ParseErrors {
    fn from(e: ParseError) -> Self {
        ParseErrors(vec![e])
    }
}
