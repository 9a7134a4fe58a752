use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum JcsError {
    /// An argument fell outside the domain of a continuous-time expression.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violated a type or operation precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The channel scenario cannot be simulated with the given waveform.
    #[error("scenario error: {0}")]
    Scenario(String),

    /// The input carries no energy to estimate from.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// Too few samples per frequency step to track the mixer output.
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    /// Invalid experiment configuration; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl JcsError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        JcsError::Parameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        JcsError::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, JcsError>;
