use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero vector cannot be normalized to a pure state")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} outside supported range 2..=8")]
    DimensionOutOfRange(usize),
    #[error("index {index} out of range for {len} outcomes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("context elements are not mutually orthogonal (overlap {0:e})")]
    NotOrthogonal(f64),
    #[error("density has empty support")]
    EmptySupport,
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error("outcome {outcome} was never observed in {attempts} draws")]
    ZeroProbabilityOutcome { outcome: usize, attempts: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
