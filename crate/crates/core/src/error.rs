use std::fmt;

use thiserror::Error;

use crate::economy::{MaterialId, ProductId};

/// A located validation finding, rendered as `<location>: <message>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Syntax(serde_json::Error),
    #[error("unknown schema version {0:?} (expected \"circloop/1\")")]
    UnknownSchema(String),
    #[error("invalid economy: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown product {0}")]
    UnknownProduct(ProductId),
    #[error("unknown material {0}")]
    UnknownMaterial(MaterialId),
    #[error("invalid demand: {0}")]
    InvalidDemand(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected} materials, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("illegal move: {0}")]
    IllegalMove(String),
    #[error("undo out of order: token {token} is not the most recent apply")]
    UndoOutOfOrder { token: u64 },
    #[error("stale bitset table: table at version {table}, configuration at {config}")]
    StaleVersion { table: u64, config: u64 },
    #[error("state space exceeds cap of {cap} assignments")]
    CapExceeded { cap: u64 },
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("schema hash mismatch: result was produced for {expected}, economy hashes to {actual}")]
    SchemaMismatch { expected: String, actual: String },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Syntax(e)
    }
}

impl Error {
    pub fn diagnostics(&self) -> Option<&[Diagnostic]> {
        match self {
            Error::Invalid(d) => Some(d),
            _ => None,
        }
    }
}
