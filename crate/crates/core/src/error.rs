use thiserror::Error;

/// Errors raised by model construction, numerical kernels and file handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Pauli index {0}, expected 1, 2 or 3")]
    InvalidPauli(u8),

    #[error("site index {site} out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("repeated site index {0} in interaction term")]
    RepeatedSite(usize),

    #[error("{n} sites exceeds the cap of {cap}")]
    SiteCapExceeded { n: usize, cap: usize },

    #[error("site count must be at least 1")]
    NoSites,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositive { eigenvalue: f64 },

    #[error("trace {trace} differs from 1")]
    TraceNotOne { trace: f64 },

    #[error("non-finite parameter value {0}")]
    NonFinite(f64),

    #[error("coordinate outside the open unit ball: |m| = {0}")]
    OutsideUnitBall(f64),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate term {0}")]
    DuplicateTerm(String),

    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
