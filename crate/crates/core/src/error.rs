use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operation requires dimension {expected}, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("transport solver breakdown: {0}")]
    Solver(String),

    #[error("coupling is not optimal (cost {cost}, optimum {optimum})")]
    NotOptimal { cost: f64, optimum: f64 },

    #[error("marginal mismatch: {0}")]
    MarginalMismatch(String),

    #[error("value {value} outside of [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("no admissible selection at step {step}: norms {norms:?} exceed bound {bound}")]
    StabilityViolation { step: usize, norms: Vec<f64>, bound: f64 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
