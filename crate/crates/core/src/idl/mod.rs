//! IDL frontend: lexing, parsing, and resolution of the reduced
//! DCE/COM interface definition dialect.
//!
//! The dialect covers typedefs (including `[string]` pointers and callback
//! function types), structs, enums with decimal or `0wx` word values,
//! constants, `sml_name` annotations, and interfaces whose operations carry
//! directional `[in]`/`[out]` attributes plus `ref`, `string`, `size_is`
//! and `iid_is`. Attributes used only for RPC distribution are rejected.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod resolve;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_unit, parse_unit_named};
pub use print::print_unit;
pub use resolve::{builtin, resolve, Builtin, BuiltinKind, Scope, TypeEntry, PREDECLARED_INTERFACES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdlError {
    #[error("{pos}: {msg}")]
    Lex { pos: Pos, msg: String },
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        pos: Pos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{pos}: {msg}")]
    Unsupported { pos: Pos, msg: String },
    #[error("{pos}: duplicate {namespace} name `{name}`")]
    Duplicate {
        pos: Pos,
        name: String,
        namespace: &'static str,
    },
    #[error("{pos}: unresolved type `{name}`")]
    UnresolvedType { pos: Pos, name: String },
    #[error("{pos}: `{attr}` target `{target}` {reason}")]
    BadAttrTarget {
        pos: Pos,
        attr: String,
        target: String,
        reason: String,
    },
    #[error("{pos}: interface inheritance cycle through `{name}`")]
    InheritanceCycle { pos: Pos, name: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
}

impl IdlError {
    pub(crate) fn lex(line: u32, col: u32, msg: &str) -> Self {
        IdlError::Lex {
            pos: Pos { line, col },
            msg: msg.to_string(),
        }
    }

    pub fn pos(&self) -> Pos {
        match self {
            IdlError::Lex { pos, .. }
            | IdlError::Parse { pos, .. }
            | IdlError::Unsupported { pos, .. }
            | IdlError::Duplicate { pos, .. }
            | IdlError::UnresolvedType { pos, .. }
            | IdlError::BadAttrTarget { pos, .. }
            | IdlError::InheritanceCycle { pos, .. }
            | IdlError::Invalid { pos, .. } => *pos,
        }
    }

    /// `file:line:col: message`
    pub fn diagnostic(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

/// Tokenizes, parses, and resolves one source text.
pub fn compile_unit(text: &str, source_name: &str) -> Result<IdlUnit, IdlError> {
    let tokens = tokenize(text)?;
    let unit = parse_unit_named(&tokens, source_name)?;
    resolve(unit)
}
