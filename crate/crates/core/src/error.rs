use thiserror::Error;

use crate::family::CoverageReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("{value} has no inverse modulo {modulus}")]
    NoInverse { value: u32, modulus: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },

    #[error("entry {value} at row {row}, column {col} is outside [0, {modulus})")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: u64,
        modulus: u32,
    },

    #[error("rows {first} and {second} are identical")]
    DuplicateRow { first: usize, second: usize },

    #[error("a family needs at least one vector of length at least one")]
    EmptyFamily,

    #[error("materializing {requested} bytes exceeds the memory budget of {limit} bytes")]
    Budget { requested: u128, limit: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("verification failed at stage `{stage}`: {report}")]
    Verification {
        stage: String,
        report: Box<CoverageReport>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn verification(stage: impl Into<String>, report: CoverageReport) -> Self {
        Error::Verification {
            stage: stage.into(),
            report: Box::new(report),
        }
    }
}
