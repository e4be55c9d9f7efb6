use thiserror::Error;

/// Errors produced by the modelling toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates its invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Numerical procedure ran out of budget before meeting its tolerance.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("singular information matrix: {0}")]
    SingularInformation(String),

    #[error("not enough data: {n} observations for {df} free parameters (need at least {required})")]
    DataTooSmall { n: usize, df: usize, required: usize },

    /// A caller broke a documented precondition of an operation.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier for the error class, used by the CLI.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParams(_) => "invalid_params",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::EmptyInput(_) => "empty_input",
            Error::NonConvergence(_) => "non_convergence",
            Error::SingularInformation(_) => "singular_information",
            Error::DataTooSmall { .. } => "data_too_small",
            Error::Contract(_) => "contract",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
