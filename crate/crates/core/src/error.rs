use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("grid is not uniform (max spacing deviation {0:.3e} s)")]
    NonUniformGrid(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lag {lag} s outside the precomputed lag table (±{span} s)")]
    LagOutOfSpan { lag: f64, span: f64 },

    #[error(
        "matrix is not positive definite after {attempts} factorization attempts \
         (last diagonal jitter {jitter:.3e})"
    )]
    Conditioning { attempts: usize, jitter: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("study aborted: {failed} of {total} trials failed (first failure: {first})")]
    StudyAborted {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse {
            line,
            msg: err.to_string(),
        }
    }
}
