//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error at {origin} line {line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    /// A config value violated its documented bound. The display form is
    /// `<key> out of <bound>` so callers can surface it verbatim.
    #[error("{key} out of {bound} (got {value})")]
    ConfigRange {
        key: &'static str,
        bound: &'static str,
        value: f64,
    },

    #[error("unknown camera id: {0}")]
    UnknownCamera(String),

    #[error("cameras {0} and {1} are disconnected")]
    DisconnectedCameras(String, String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero-norm feature vector at index {index}")]
    ZeroNormVector { index: usize },

    #[error("single-class input: need at least one positive and one negative sample")]
    SingleClassInput,

    #[error("model not fitted")]
    ModelNotFitted,

    #[error("invalid model input: {0}")]
    InvalidModelInput(String),

    #[error("numerical failure in {stage}: {message}")]
    Numerical { stage: &'static str, message: String },

    #[error("graph stage mismatch: expected {expected}, got {got}")]
    StageMismatch { expected: &'static str, got: &'static str },

    #[error("non-symmetric affinity matrix (max asymmetry {0})")]
    NonSymmetric(f64),

    #[error("invalid trajectory count K={k} for {n} vertices")]
    InvalidK { k: usize, n: usize },

    #[error("path enumeration exceeded cap of {cap} simple paths")]
    PathExplosion { cap: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("tracklet {0} is absent from all predicted trajectories")]
    AbsentFromPredictions(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An error from a pipeline stage, tagged with the stage name.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
