use thiserror::Error;

use crate::types::Provenance;

/// Errors raised by the expansion engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("embedding contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("embedding has zero dimension")]
    EmptyEmbedding,

    #[error("duplicate store entry for `{id}` ({provenance})")]
    DuplicateKey { id: String, provenance: Provenance },

    #[error("no `{provenance}` embedding stored for `{id}`")]
    MissingEmbedding { id: String, provenance: Provenance },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("empty exemplar set for class `{0}`")]
    EmptyExemplarSet(String),

    #[error("duplicate member `{pair_id}` in exemplar set `{class}`")]
    DuplicateMember { class: String, pair_id: String },

    #[error("no classes to rank")]
    EmptyIndex,

    #[error("ranked lists cover different class universes")]
    InconsistentUniverse,

    #[error("class `{0}` is not covered")]
    UnknownClass(String),

    #[error("class `{0}` has no contrastive classes")]
    NoContrastiveClasses(String),

    #[error("invalid template `{template}`: {reason}")]
    InvalidTemplate { template: String, reason: String },

    #[error("template slot `{{{0}}}` has no binding")]
    MissingBinding(String),

    #[error("invalid span in `{id}`: {reason}")]
    InvalidSpan { id: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("store record {index}: {reason}")]
    StoreRecord { index: usize, reason: String },

    #[error("seed validation: {0}")]
    Seeds(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("embedding provider: {0}")]
    Provider(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the environment (files, provider) rather than of the inputs.
    pub fn is_environmental(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Provider(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
