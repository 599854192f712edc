use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate bias {0}: must lie strictly inside (0,1)")]
    DegenerateBias(f64),

    #[error("coordinate {index} out of range for dimension {dimension}")]
    CoordinateOutOfRange { index: usize, dimension: usize },

    #[error("table too large: {0}")]
    TooLarge(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("incomplete assignment: expected {expected} labels, got {got}")]
    IncompleteAssignment { expected: usize, got: usize },

    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("missing local distribution for subset {0:?}")]
    MissingLocal(Vec<usize>),

    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,

    #[error("moment matrix is not PSD: minimum eigenvalue {0:e}")]
    NotPsd(f64),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}
