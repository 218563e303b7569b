use thiserror::Error;

/// Errors raised by the simulator and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed degree distribution {input:?}: {reason}")]
    DistSyntax { input: String, reason: String },

    #[error("degree distribution coefficients sum to {sum}, expected 1")]
    DistSum { sum: f64 },

    #[error("duplicate degree {0} in degree distribution")]
    DuplicateDegree(u32),

    #[error("degree must be at least 1, got {0}")]
    DegreeTooSmall(u32),

    #[error("invalid probability {prob} for degree {degree}")]
    BadProbability { degree: u32, prob: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("max degree {max_degree} exceeds frame length {n_slots}")]
    DegreeExceedsFrame { max_degree: u32, n_slots: usize },

    #[error("{0}")]
    Validation(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("no records to write")]
    EmptyRecords,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool error: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
