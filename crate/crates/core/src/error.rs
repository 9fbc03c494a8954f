use thiserror::Error;

/// Errors raised across ingestion, fitting, integration and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: usize, column: String },
    #[error("non-numeric value '{value}' at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("series needs at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("duplicate variable name '{0}'")]
    DuplicateName(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("nonpositive divisor for '{variable}' at row {row}")]
    NonPositiveDivisor { variable: String, row: usize },
    #[error("underdetermined least squares: {rows} rows for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
    #[error("singular matrix")]
    Singular,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("integration blew up at t = {time}")]
    BlowUp { time: f64 },
    #[error("walk-forward step {step} failed: {message}")]
    StepFailed { step: usize, message: String },
    #[error("undefined normalization: variable '{0}' has all-zero truths")]
    ZeroTruth(String),
    #[error("not a fixed point: residual {residual:e} exceeds {tol:e}")]
    NotFixedPoint { residual: f64, tol: f64 },
    #[error("every candidate failed: {0}")]
    AllCandidatesFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
