//! OpenQASM 2.0 subset frontend.
//!
//! Accepts the `OPENQASM 2.0` header, `qreg`/`creg` declarations, the gates
//! `cx x y z id h cz`, `barrier`, `measure`, and a `delay(n) q[i];` extension
//! whose duration is an integer number of dt. `include` lines and `//`
//! comments are skipped. Whole-register arguments are expanded per index.

mod ast;
mod emit;
mod lexer;
mod parser;

use thiserror::Error;

pub use ast::{GateKind, Operand, QasmAst, RegisterDecl, RegisterKind, SourceLocation, Statement};
pub use emit::emit;
pub use parser::parse;

/// Device time unit of the `delay` extension, in nanoseconds.
///
/// Kept as metadata for reports; scanning never converts durations.
pub const DT_NANOSECONDS: f64 = 2.0 / 5.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{location}: syntax error: {message}")]
    Syntax {
        location: SourceLocation,
        message: String,
    },
    #[error("{location}: unknown gate `{name}`")]
    UnknownGate {
        location: SourceLocation,
        name: String,
    },
    #[error(
        "{location}: qubit index {index} out of range for register `{register}` of size {size}"
    )]
    QubitOutOfRange {
        location: SourceLocation,
        register: String,
        index: usize,
        size: usize,
    },
    #[error("{location}: bit index {index} out of range for register `{register}` of size {size}")]
    BitOutOfRange {
        location: SourceLocation,
        register: String,
        index: usize,
        size: usize,
    },
    #[error("{location}: register `{name}` declared twice")]
    DuplicateRegister {
        location: SourceLocation,
        name: String,
    },
    #[error("{location}: register `{name}` is not declared")]
    UndeclaredRegister {
        location: SourceLocation,
        name: String,
    },
    #[error("{location}: operand {operand} used twice in one gate")]
    DuplicateOperand {
        location: SourceLocation,
        operand: String,
    },
    #[error("{location}: missing `OPENQASM 2.0;` header")]
    MissingHeader { location: SourceLocation },
}

impl ParseError {
    pub fn location(&self) -> SourceLocation {
        match self {
            ParseError::Syntax { location, .. }
            | ParseError::UnknownGate { location, .. }
            | ParseError::QubitOutOfRange { location, .. }
            | ParseError::BitOutOfRange { location, .. }
            | ParseError::DuplicateRegister { location, .. }
            | ParseError::UndeclaredRegister { location, .. }
            | ParseError::DuplicateOperand { location, .. }
            | ParseError::MissingHeader { location } => *location,
        }
    }
}
