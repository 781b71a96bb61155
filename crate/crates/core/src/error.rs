use thiserror::Error;

/// Errors raised by the numerical kernels, enumerations and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("box length must be a positive integer, got {0}")]
    NonIntegerBoxLength(f64),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: i64, limit: i64 },

    #[error("invalid Lebesgue exponent {0}: expected 1 <= p <= inf")]
    InvalidExponent(f64),

    #[error("frequency constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("resonant indices rejected: {0}")]
    ResonantIndices(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("generation {requested} out of range 1..={max}")]
    GenerationOutOfRange { requested: usize, max: usize },

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("incomplete index assignment: node {0} has no frequency")]
    IncompleteAssignment(usize),

    #[error("phase list is empty")]
    EmptyPhaseList,

    #[error("divisor count undefined for {0}")]
    DivisorDomain(i64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solution blew up at t = {t}")]
    Blowup { t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
