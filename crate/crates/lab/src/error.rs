use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown experiment `{0}` (run `sfc-lab list`)")]
    UnknownExperiment(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] sfc_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    /// Process exit code: 2 for configuration problems, 3 for numeric
    /// failures, 4 for output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::UnknownExperiment(_) => 2,
            LabError::Numeric(_) => 3,
            LabError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}
