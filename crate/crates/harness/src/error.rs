use std::path::PathBuf;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Audit(#[from] kvaudit::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl HarnessError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    /// Process exit status: 2 for configuration problems, 3 for failures caused
    /// by the observed data, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Audit(e) if e.is_statistical() => 3,
            HarnessError::Audit(kvaudit::Error::Io { .. } | kvaudit::Error::Format(_)) => 1,
            HarnessError::Audit(_) => 2,
            HarnessError::SelfTest(_) => 3,
            HarnessError::Io { .. } | HarnessError::Csv { .. } => 1,
        }
    }
}
