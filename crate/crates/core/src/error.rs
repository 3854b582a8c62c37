use thiserror::Error;

use crate::sdp::SdpSolution;

#[derive(Debug, Error)]
pub enum DksError {
    #[error("vertex {index} out of range for a graph on {n} vertices")]
    Index { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("gave up after {attempts} attempts: {detail}")]
    RetryExhausted {
        attempts: usize,
        detail: String,
        /// Best certificate value seen (for example the smallest spectral bound).
        best: Option<f64>,
    },

    #[error("parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported format_version {found}, expected {expected}")]
    Version { found: u64, expected: u64 },

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error(
        "solver stopped after {} iterations without converging (primal {:.2e}, dual {:.2e}, gap {:.2e})",
        .0.iterations, .0.residuals.primal, .0.residuals.dual, .0.residuals.gap
    )]
    NonConverged(Box<SdpSolution>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DksError {
    pub fn param(msg: impl Into<String>) -> Self {
        DksError::Param(msg.into())
    }

    pub(crate) fn parse_at(path: impl Into<String>, message: impl Into<String>) -> Self {
        DksError::Parse {
            path: path.into(),
            line: 0,
            column: 0,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, DksError>;
