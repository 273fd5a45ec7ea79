use crate::linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{count} deterministic boxes exceed the cap of {cap}")]
    CombinatorialOverflow { count: u128, cap: usize },
    #[error("invalid position: {0}")]
    InvalidPosition(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("invalid LHS model: {0}")]
    InvalidModel(String),
    #[error("marginal needs a proper nonempty subset of parties")]
    NoProperSubset,
    #[error("signaling detected: marginal depends on dropped settings (deviation {deviation:e})")]
    SignalingDetected { deviation: f64 },
    #[error("vector is not in the common image (residual {residual:e})")]
    VectorNotInImage { residual: f64 },
    #[error("operation requires trusted dimension {expected}, got {found}")]
    WrongDimension { expected: usize, found: usize },
    #[error("assemblage is not on the edge")]
    NotOnEdge,
    #[error("no LHS part can be subtracted")]
    NothingToSubtract,
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("state is not entangled across the AB|C cut")]
    NotEntangled,
    #[error("no suitable measurements found after {tries} tries")]
    SearchExhausted { tries: usize },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("POVM element is trivial (0 or identity)")]
    TrivialPovm,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid block at {position}: {source}")]
    InvalidBlock { position: String, source: LinalgError },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
