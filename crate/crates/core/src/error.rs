use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulator, model, data and statistics layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported qubit count {0} (expected 1..={max})", max = crate::statevec::MAX_QUBITS)]
    QubitCount(usize),
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },
    #[error("two-qubit gate uses qubit {0} twice")]
    DuplicateQubit(usize),
    #[error("amplitude encoding needs a nonzero vector (norm {0:e} below threshold)")]
    ZeroNorm(f64),
    #[error("{len} features do not fit into {capacity} amplitudes")]
    Capacity { len: usize, capacity: usize },
    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("backward called before forward on layer {0}")]
    NoForward(&'static str),
    #[error("metric needs both classes present")]
    SingleClass,
    #[error("no positive labels")]
    NoPositives,
    #[error("all paired differences are zero")]
    ZeroDifferences,
    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },
    #[error("npy: {0}")]
    Npy(String),
    #[error("fold construction: {0}")]
    Folds(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Zip(#[from] zip::result::ZipError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
