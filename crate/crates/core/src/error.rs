use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mode (i={family}, n={degree}, j={order})")]
    InvalidMode { family: u8, degree: usize, order: i64 },

    #[error("evaluation at a pole (t = {0}) is not supported")]
    Pole(f64),

    #[error("grid mismatch: {left:?} vs {right:?}")]
    GridMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("grid {grid:?} does not resolve {what} (needs n_t >= {min_t}, n_phi >= {min_phi})")]
    UnderResolved {
        grid: (usize, usize),
        what: String,
        min_t: usize,
        min_phi: usize,
    },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient set is not normalized: |u|² = {norm_sq}, expected 4π")]
    NotNormalized { norm_sq: f64 },

    #[error("field is not pointwise unit (max deviation {0:e})")]
    NonUnitField(f64),

    #[error("field is not tangential (max |v·n| = {0:e})")]
    NonTangential(f64),

    #[error("energy increased by {increase:e} at step {step}; reduce dt")]
    EnergyIncrease { step: usize, increase: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
