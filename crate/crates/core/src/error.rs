use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The wavenumber is (numerically) a Dirichlet eigenvalue of the region
    /// the operator lives on.
    #[error("k^2 is near a Dirichlet eigenvalue ({0})")]
    EigenvalueProximity(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("indicator vanishes on the whole grid; cannot normalize")]
    DegenerateIndicator,

    #[error("malformed {format} data: {message}")]
    Format {
        format: &'static str,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn nfm(msg: impl Into<String>) -> Self {
        Error::Format {
            format: "NFM",
            message: msg.into(),
        }
    }

    pub(crate) fn img(msg: impl Into<String>) -> Self {
        Error::Format {
            format: "IMG",
            message: msg.into(),
        }
    }

    /// True for failures that come from the numerics rather than from bad
    /// input or the file system.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenvalueProximity(_) | Error::SingularSystem(_) | Error::DegenerateIndicator
        )
    }
}
