use thiserror::Error;

/// Errors raised by the PLMM library.
#[derive(Debug, Error)]
pub enum PlmmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("probability vector is not on the simplex: {0}")]
    NotOnSimplex(String),

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("component {component} received no responsibility mass")]
    EmptyComponent { component: usize },

    #[error("sample {sample} has zero likelihood under every component")]
    ZeroLikelihood { sample: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("starting point coordinate {index} = {value} lies outside [{lo}, {hi}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,

    #[error(
        "could not draw separated components within {attempts} attempts (separation {separation})"
    )]
    SeparationUnreachable { attempts: usize, separation: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PlmmError> = std::result::Result<T, E>;
