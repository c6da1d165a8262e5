use thiserror::Error;

/// Errors produced anywhere in the modelling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range for {family}: {detail}")]
    ParameterDomain {
        family: &'static str,
        detail: String,
    },

    #[error("point ({u1}, {u2}) is not strictly inside the unit square")]
    Boundary { u1: f64, u2: f64 },

    #[error("value {value} outside [0, 1]")]
    OutsideUnitInterval { value: f64 },

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("component is not usable in a four-corner mixture: {0}")]
    NotSingleCorner(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient data: need at least {required}, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("series are not aligned: {0}")]
    Alignment(String),

    #[error("no start converged (best log-likelihood {best_loglik}, gradient norm {best_grad_norm}, {n_starts} starts)")]
    NonConvergence {
        best_loglik: f64,
        best_grad_norm: f64,
        n_starts: usize,
    },

    #[error("probability {value} lies outside the table range [{lo}, {hi}]")]
    Extrapolation { value: f64, lo: f64, hi: f64 },

    #[error("invalid quantile table: {0}")]
    QuantileTable(String),

    #[error("threshold u = {u} leaves no exceedances among {m} observations")]
    NoExceedances { u: f64, m: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("bin width {0} does not divide the unit interval")]
    BinWidth(f64),

    #[error("no event days for the composite")]
    EmptyComposite,

    #[error("gridbox tiling: {0}")]
    Tiling(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
