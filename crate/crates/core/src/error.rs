use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("angular step {0} rad must lie in (0, π/8] and divide 2π evenly")]
    AngularResolution(f64),

    #[error("start pose (x={x:.3} m, y={y:.3} m, heading={heading_deg:.1}°) {reason}")]
    StartPose { x: f64, y: f64, heading_deg: f64, reason: String },

    #[error("planning failed: {0}")]
    Planning(String),

    #[error("heat map grids differ: {0}")]
    GridMismatch(String),

    #[error("scene primitive `{name}`: {message}")]
    Scene { name: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Planning,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::Config(_)
            | Error::AngularResolution(_)
            | Error::GridMismatch(_)
            | Error::Scene { .. } => ErrorKind::Config,
            Error::StartPose { .. } | Error::Planning(_) => ErrorKind::Planning,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
