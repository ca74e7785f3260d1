use std::path::{Path, PathBuf};

use encact::activations::ActivationError;
use encact::he_core::HeError;
use encact::netgraph::GraphError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {msg}", path.display())]
    Io { path: PathBuf, msg: String },
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{}: shape mismatch: expected {expected:?}, got {got:?}", path.display())]
    ShapeMismatch {
        path: PathBuf,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("{}: checksum does not match the manifest", path.display())]
    Checksum { path: PathBuf },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
}

impl BenchError {
    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        BenchError::Io {
            path: path.to_path_buf(),
            msg: err.to_string(),
        }
    }

    /// Process exit status: 2 usage, 3 data or validation, 4 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Graph(GraphError::PlanMismatch(_))
            | BenchError::Graph(GraphError::He(HeError::DepthExhausted { .. })) => 4,
            _ => 3,
        }
    }
}

impl From<HeError> for BenchError {
    fn from(e: HeError) -> Self {
        BenchError::Graph(GraphError::He(e))
    }
}
