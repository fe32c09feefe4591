use std::path::PathBuf;

use mmkey_core::spatial::SpatialError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{source_name}: {message}")]
    Parse { source_name: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model: {0}")]
    Model(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Stable, machine-readable name of the failure class.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Parse { .. } => "parse",
            HarnessError::Config(_) => "config",
            HarnessError::Model(_) => "model",
            HarnessError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } | HarnessError::Config(_) => 2,
            HarnessError::Model(_) => 3,
            HarnessError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<SpatialError> for HarnessError {
    fn from(e: SpatialError) -> Self {
        HarnessError::Model(e.to_string())
    }
}
