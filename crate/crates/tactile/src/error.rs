use thiserror::Error;

/// Errors produced by the tactile pipeline.
#[derive(Debug, Error)]
pub enum TactileError {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("asymmetric or non-finite matrix: {0}")]
    BadMatrix(String),

    #[error("degenerate spectrum")]
    DegenerateSpectrum,

    #[error("zero variance")]
    ZeroVariance,

    #[error("not enough segments: need at least {need}, got {got}")]
    TooFewSegments { need: usize, got: usize },

    #[error("missing class (loc {loc}, id {id})")]
    MissingClass { loc: usize, id: usize },

    #[error("unknown class (loc {loc}, id {id})")]
    UnknownClass { loc: usize, id: usize },

    #[error("empty model")]
    EmptyModel,

    #[error("indistinguishable batch: all points share one `what' label")]
    IndistinguishableBatch,

    #[error("grid needs at least 2 `what' classes, got {0}")]
    TooFewWhatClasses(usize),

    #[error("parameter out of range: {0}")]
    BadParameter(String),

    #[error("stimulus kind mismatch: expected {expected}, got {got}")]
    KindMismatch { expected: String, got: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("unsupported schema version {got} (expected {expected})")]
    SchemaVersion { got: u32, expected: u32 },

    #[error("all actual values are zero")]
    AllZeroActuals,

    #[error("empty group `{0}`")]
    EmptyGroup(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, TactileError>;
