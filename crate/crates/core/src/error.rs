use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension {dim} exceeds configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace deviates from one (trace {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("unknown party label {0}")]
    UnknownParty(usize),

    #[error("duplicate party label {0}")]
    DuplicateParty(usize),

    #[error("cannot trace out every party: the result would be a scalar")]
    ScalarTrace,

    #[error("Kraus operators are not trace preserving (deviation {0:e})")]
    Completeness(f64),

    #[error("invalid projective measurement: {0}")]
    InvalidMeasurement(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("derivative has support outside the state's support (component {0:e}): rank change")]
    RankChange(f64),

    #[error("invalid encoding: {0}")]
    Encoding(String),

    #[error("state is not pure (purity {0})")]
    NotPure(f64),

    #[error("singular point: outcome probability {prob:e} vanishes near theta = {theta}")]
    SingularPoint { theta: f64, prob: f64 },

    #[error("quantum Fisher information has zero trace: no information about the parameters")]
    NoInformation,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid system wiring: {0}")]
    Wiring(String),

    #[error("unknown behavior id `{0}`")]
    UnknownBehavior(String),

    #[error("branch enumeration needs {needed} branches, maximum is {max}")]
    BranchOverflow { needed: usize, max: usize },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
