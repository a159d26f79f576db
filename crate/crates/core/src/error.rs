use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no pixel exceeds threshold {0}")]
    AllPixelsBelowThreshold(f64),

    #[error("scale must be strictly positive, got {0}")]
    NonpositiveScale(f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("transport solver failed: {0}")]
    SolverFailure(String),

    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("reference matrix has zero norm")]
    ZeroTruth,

    #[error("matrix kind {0} not accepted here")]
    WrongKind(&'static str),

    #[error("sample plan would be empty")]
    EmptyPlan,

    #[error("count {count} out of range 1..={max}")]
    CountOutOfRange { count: usize, max: usize },

    #[error("index ({0}, {1}) out of range")]
    IndexOutOfRange(usize, usize),

    #[error("rate must lie in (0, 1], got {0}")]
    InvalidRate(f64),

    #[error("completion diverged after {iterations} iterations (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("Nyström core is identically zero while the sampled columns are not")]
    DegenerateCore,

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error("configuration is not centered (max column mean {0:e})")]
    NotCentered(f64),

    #[error("embedding dimension {dim} out of range 1..={max}")]
    DimensionOutOfRange { dim: usize, max: usize },

    #[error("training set is empty")]
    EmptyTrainSet,

    #[error("degenerate classes: {0}")]
    DegenerateClasses(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical routine rather than of the input or environment.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailure(_)
                | Error::Diverged { .. }
                | Error::DegenerateCore
                | Error::DegenerateClasses(_)
                | Error::NotCentered(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
