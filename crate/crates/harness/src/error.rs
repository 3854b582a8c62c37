use dks_core::DksError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] DksError),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// Process exit code for single-run CLI mode.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Core(e) => match e {
                DksError::NonConverged(_) => 3,
                DksError::Index { .. }
                | DksError::Param(_)
                | DksError::Domain(_)
                | DksError::Parse { .. }
                | DksError::Version { .. }
                | DksError::Size(_) => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}
