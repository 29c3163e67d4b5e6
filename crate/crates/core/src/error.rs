use thiserror::Error;

use crate::geometry::Phase;

pub type Result<T, E = CollageError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CollageError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("action not legal in {phase:?} phase: {action}")]
    Phase { phase: Phase, action: String },

    #[error("collage has no visible content")]
    EmptyContent,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid action mask: {0}")]
    InvalidMask(&'static str),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("episode is already finished")]
    EpisodeDone,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl CollageError {
    pub(crate) fn invalid_input(msg: impl Into<String>) -> Self {
        CollageError::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CollageError::Config(msg.into())
    }
}
