use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix entry at ({0}, {1}) is not finite")]
    NonFinite(usize, usize),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("singular value {0} exceeds 1")]
    SingularValueAboveOne(f64),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The requested computation exceeds a configured size or work budget.
    #[error("refused: {0}")]
    ResourceRefused(String),

    #[error("probability has a non-negligible imaginary part: {re} + {im}i")]
    NonRealProbability { re: f64, im: f64 },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("non-finite result in trial {0}")]
    NonFiniteTrial(u64),

    #[error("distributions are over different configuration spaces")]
    MismatchedSpaces,

    #[error("the two models are indistinguishable at leading order (W1 = 0)")]
    Indistinguishable,

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("matrix json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
