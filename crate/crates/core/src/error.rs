use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported activation for {op}: {activation}")]
    UnsupportedActivation { op: &'static str, activation: String },

    #[error("episode already finished; call reset first")]
    EpisodeDone,

    #[error("controller already stopped")]
    ControllerStopped,

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {}: {msg}", path.display())]
    Csv { path: PathBuf, msg: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NonFinite(_) => "non_finite",
            Error::UnsupportedActivation { .. } => "unsupported_activation",
            Error::EpisodeDone => "episode_done",
            Error::ControllerStopped => "controller_stopped",
            Error::Diverged(_) => "diverged",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
        }
    }
}
