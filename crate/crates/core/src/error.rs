use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("checksum mismatch in {0}")]
    Checksum(&'static str),

    #[error("unknown task function `{0}`")]
    UnknownTask(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at {stage}: {detail}")]
    Divergence { stage: String, detail: String },

    #[error("no finite result to select from")]
    NoResult,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }

    /// Short category name used in CLI error records.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Layout(_) => "layout",
            Error::InvalidNetwork(_) => "invalid_network",
            Error::Format { .. } => "format",
            Error::Checksum(_) => "checksum",
            Error::UnknownTask(_) => "unknown_task",
            Error::Config(_) => "config",
            Error::Divergence { .. } => "divergence",
            Error::NoResult => "no_result",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
