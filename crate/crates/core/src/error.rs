use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The spectrum (or the part of it inside the analysed band) carries no energy,
    /// so the roll-off point is undefined.
    #[error("zero spectral energy, roll-off point undefined")]
    ZeroEnergy,

    #[error("spatial size {0} is too small, need at least 3")]
    TooSmall(usize),

    #[error("layer `{0}` has no usable SROP values")]
    EmptyLayer(String),

    #[error("need at least two distinct values for a density estimate")]
    DegenerateSample,

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("manifest validation failed: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input (as opposed to the environment).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

/// Parse failures of the binary container and dataset formats.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic number")]
    BadMagic,
    #[error("unsupported format version {0}.{1}")]
    UnsupportedVersion(u8, u8),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("unsupported dtype `{0}`")]
    UnsupportedDtype(String),
    #[error("fortran-ordered arrays are not supported")]
    FortranOrder,
    #[error("payload has {actual} bytes, shape requires {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("truncated input")]
    Truncated,
}
