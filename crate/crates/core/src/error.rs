use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinates must be finite")]
    NonFinite,

    #[error("point cloud must be nonempty")]
    EmptyCloud,

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("unknown index letter `{0}`")]
    UnknownIndex(String),

    #[error("depth too large: {count} exceeds cap {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("prefix depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    #[error("prefixes agree through depth {0}: mismatch beyond depth")]
    MismatchBeyondDepth(usize),

    #[error("element `{0}` is outside the universe")]
    OutsideUniverse(String),

    #[error("universe of {0} elements is too large for exhaustive enumeration")]
    UniverseTooLarge(usize),

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
