use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: String },

    #[error("{metric} is undefined: group {group} has no {missing} examples")]
    UndefinedMetric {
        metric: &'static str,
        group: usize,
        missing: &'static str,
    },

    #[error("infeasible side constraints: {0}")]
    InfeasibleSideConstraints(String),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("enumeration space of {size} candidates exceeds the cap of {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("undefined bound: {0}")]
    UndefinedBound(String),

    #[error("invalid number: {0:?}")]
    InvalidNumber(String),

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}, column {column:?}: cannot parse {value:?}")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("MPS parse error at line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error("scorecard parse error: {0}")]
    Scorecard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
