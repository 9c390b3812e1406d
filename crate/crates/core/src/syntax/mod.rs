//! Tokenizer, parser, printer and static purity check for program text.

pub mod ast;
mod lexer;
mod parser;
mod printer;
mod purity;

use std::fmt;

pub use ast::*;
pub use lexer::{tokenize, HashConst, Token, TokenKind};
pub use parser::{parse, parse_expressions, parse_program};
pub use purity::{check_program_purity, check_purity, PurityContext, PurityViolation, FORBIDDEN_FORMS};

/// A 1-based line/column position in program text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SyntaxErrorKind {
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("illegal character {0:?}")]
    IllegalCharacter(char),
    #[error("unsupported escape sequence \\{0}")]
    BadEscape(char),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("malformed symbol literal")]
    BadSymbol,
    #[error("unknown constant #{0}")]
    UnknownHashConstant(String),
    #[error("qualification `{0}` must be exactly `owner.stream`")]
    BadQualification(String),
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unexpected `)`")]
    UnbalancedClose,
    #[error("empty form `()`")]
    EmptyForm,
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("malformed `{form}`: {reason}")]
    Malformed { form: String, reason: String },
    #[error("`{0}` is not allowed here")]
    Misplaced(String),
    #[error("unknown top-level form `{0}`")]
    UnknownTopLevel(String),
    #[error("unknown member form `{0}`")]
    UnknownMember(String),
    #[error("program has no actor behaviour named Main")]
    MissingMain,
    #[error("actor Main has no zero-argument constructor named start")]
    MissingStart,
    #[error("{category} `{name}` is defined twice")]
    DuplicateDefinition { category: &'static str, name: String },
    #[error("`{member}` is defined twice in `{owner}`")]
    DuplicateMember { owner: String, member: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct SyntaxError {
    pub kind: SyntaxErrorKind,
    pub pos: Pos,
}

impl SyntaxError {
    pub fn new(kind: SyntaxErrorKind, pos: Pos) -> Self {
        SyntaxError { kind, pos }
    }
}
