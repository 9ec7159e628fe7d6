use thiserror::Error;

/// Errors produced by the solver stack and the data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("agent index {index} out of range for {count} agents")]
    AgentIndex { index: usize, count: usize },

    #[error("agent count mismatch: scenario has {expected}, got {actual}")]
    AgentCountMismatch { expected: usize, actual: usize },

    #[error("goal states required in planning mode but absent")]
    MissingGoals,

    #[error("ground truth required but absent")]
    MissingGroundTruth,

    #[error("solver diverged: {0}")]
    SolverDiverged(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("csv schema error: {0}")]
    CsvSchema(String),

    #[error("track {track} has duplicate frame {frame}")]
    DuplicateFrame { track: String, frame: i64 },

    #[error("track unclassifiable: {0}")]
    Unclassifiable(String),

    #[error("insufficient frames: {0}")]
    InsufficientFrames(String),

    #[error("no usable input: {0}")]
    Empty(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
