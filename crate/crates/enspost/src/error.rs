use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Distribution or model parameters violate an invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched sizes or kinds between arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// Parameter estimation could not produce a model.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Training window contained no usable forecast-observation pairs.
    #[error("empty training window")]
    EmptyWindow,

    /// Precipitation training window with all-zero observations.
    #[error("degenerate climate: all training observations are zero")]
    DegenerateClimate,

    /// A template archive or configuration cannot support the request.
    #[error("configuration error: {0}")]
    Config(String),

    /// Skill score against a zero reference score.
    #[error("undefined skill: reference mean score is zero")]
    UndefinedSkill,

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Schema-valid input violating a forecast invariant.
    #[error("validation error at line {line}: {msg}")]
    Validation { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
