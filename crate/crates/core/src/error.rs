use thiserror::Error;

/// Errors raised by the simulation, stimulus, session and statistics code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid condition: {0}")]
    InvalidCondition(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("frame covers {frame_deg:.3} deg but the phosphene map needs {map_deg:.3} deg")]
    FovMismatch { frame_deg: f64, map_deg: f64 },

    #[error("viewport of {fov_deg} deg does not fit a {extent_deg:.3} deg source")]
    ViewportTooLarge { fov_deg: f64, extent_deg: f64 },

    #[error("sample {value} at index {index} is outside [0, 1]")]
    SampleOutOfRange { index: usize, value: f64 },

    #[error("activation has {got} levels but the map has {expected} phosphenes")]
    ActivationMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),

    #[error("stimulus does not fit: {0}")]
    StimulusTooLarge(String),

    #[error("no records")]
    EmptyRecords,

    #[error("records mix {0}")]
    MixedRecords(String),

    #[error("responder failed: {0}")]
    Responder(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unbalanced design: {0}")]
    Unbalanced(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
