use thiserror::Error;

/// Errors raised by the simulator and its harnesses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid plant `{id}`: {reason}")]
    InvalidPlant { id: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid bid for plant `{plant_id}`: {reason}")]
    InvalidBid { plant_id: String, reason: String },

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient history: need at least {needed} points, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("forecast horizon too short: need {needed} years, have {have}")]
    Horizon { needed: usize, have: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("TOML parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
