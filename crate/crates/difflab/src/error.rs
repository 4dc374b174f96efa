//! Crate-wide error type and process exit codes.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("timestep {t} out of range for schedule with {steps} steps")]
    StepOutOfRange { t: usize, steps: usize },

    #[error("missing input: {0}")]
    MissingInput(PathBuf),

    #[error("checkpoint objective is `{checkpoint}` but sampler `{requested}` was requested")]
    ObjectiveMismatch {
        checkpoint: String,
        requested: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("impossible evidence: q(x_t | x_0) = 0 for the given pair")]
    ImpossibleEvidence,

    #[error("impossible prediction: all reverse-distribution terms are zero")]
    ImpossiblePrediction,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error: {msg}")]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI: 2 usage, 3 input missing, 4
    /// objective/sampler mismatch, 5 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::StepOutOfRange { .. } => 2,
            Error::MissingInput(_) => 3,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 3,
            Error::ObjectiveMismatch { .. } => 4,
            _ => 5,
        }
    }
}
