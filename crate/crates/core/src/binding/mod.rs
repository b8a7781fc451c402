//! Binding generation: lifted signatures, enum maps, record layouts, and
//! the two emitted artifacts (signature text and the JSON sidecar).

mod build;
mod desc;
mod manifest;
mod sigtext;

use thiserror::Error;

pub use build::{build_binding, module_name};
pub use desc::*;
pub use manifest::Manifest;
pub use sigtext::emit_sig_text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindingError {
    #[error("interface `{interface}` has no IID in the manifest")]
    MissingIid { interface: String },
    #[error("unsupported: {what}")]
    Unsupported { what: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("{0}")]
    Invalid(String),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("schema violation at `{path}`: {msg}")]
    Schema { path: String, msg: String },
}
