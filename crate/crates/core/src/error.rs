use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("padding overflow: {pairs} pairs exceed padding length {padding}")]
    Padding { pairs: usize, padding: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no overlapping outcomes between the two output histograms")]
    NoOverlap,

    #[error("distribution separation failed: {0}")]
    Separation(String),

    #[error("malformed histogram data: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by the observed data rather than by the caller's setup.
    pub fn is_statistical(&self) -> bool {
        matches!(self, Error::NoOverlap | Error::Separation(_))
    }
}
