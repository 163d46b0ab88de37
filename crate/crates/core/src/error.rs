use std::io;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("phi = {0} does not give an irreducible x² + x + phi over GF(2²)")]
    InvalidPhi(u8),
    #[error("lambda = {lambda} does not give an irreducible x² + x + lambda over GF((2²)²) with phi = {phi}")]
    InvalidLambda { phi: u8, lambda: u8 },
    #[error("composite elements from parameter sets {left} and {right} cannot be combined")]
    ParamMismatch { left: u32, right: u32 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] FieldError),

    #[error("invalid length for {what}: expected {expected}, got {actual}")]
    InvalidLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("requested {requested} parameter sets but only {available} are available")]
    NotEnoughSets { requested: usize, available: usize },

    #[error("catalog must hold at least {required} parameter sets, got {actual}")]
    CatalogTooSmall { required: usize, actual: usize },

    #[error("LFSR state must be nonzero")]
    ZeroLfsrState,

    #[error("parameter set {id} failed verification: {reason}")]
    InvalidParameterSet { id: u32, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed trace file: {0}")]
    TraceFormat(String),

    #[error("malformed catalog: {0}")]
    Catalog(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
