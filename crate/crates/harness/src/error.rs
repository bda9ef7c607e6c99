use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad command-line value, malformed file or invalid scenario.
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] ma_array::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("plot {path}: {message}")]
    Plot { path: PathBuf, message: String },
}

impl HarnessError {
    /// Process exit code: 2 for input problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use ma_array::Error as E;
        match self {
            Self::Input(_) => 2,
            Self::Core(E::Validation(_) | E::Parse(_) | E::Options(_) | E::InfeasibleGeometry { .. }) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
