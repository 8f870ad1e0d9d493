use thiserror::Error;

/// Errors surfaced by planning, prediction, and geometry routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite vehicle state encountered during propagation")]
    NonFiniteState,

    #[error("control sequence is empty")]
    EmptyControls,

    #[error("trajectory has too few points (got {got}, need at least {need})")]
    TooFewPoints { got: usize, need: usize },

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("observation matrix is not rectangular")]
    RaggedObservations,

    #[error("vehicle at index {0} has no lane assignment (off-road y position)")]
    MissingLane(usize),

    #[error("cubic fit is singular: anchors must have distinct, strictly increasing x")]
    SingularFit,

    #[error("trajectory x is not strictly increasing; smoothing skipped")]
    NonMonotoneX,

    #[error("target position is not ahead of the ego vehicle")]
    TargetBehindEgo,

    #[error("scenario config error: {0}")]
    Config(String),

    #[error("could not place vehicles without overlap after {0} attempts")]
    SpawnRejection(usize),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
