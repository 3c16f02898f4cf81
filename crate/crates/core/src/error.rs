use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building or reading graphs.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("node id {id} out of range for {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("column `{0}` not found in node table header")]
    MissingColumn(String),
    #[error("column `{column}` row {row}: value {value} is not binary")]
    NonBinary {
        column: String,
        row: usize,
        value: String,
    },
    #[error("label class {0} has no members")]
    EmptyClass(u8),
    #[error("invalid SBM configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Shape(String),
}

/// Errors raised by the eigensolvers.
#[derive(Debug, Error)]
pub enum EigenError {
    #[error("requested {k} eigenpairs from an operator of dimension {n}")]
    TooManyEigenpairs { k: usize, n: usize },
    #[error("K must be at least 1")]
    ZeroK,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("no convergence after {iterations} iterations; worst relative residual {worst_residual:e}")]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
        residuals: Vec<f64>,
    },
    #[error("dense eigendecomposition refused: n = {n} exceeds the dense limit {limit}")]
    DenseLimit { n: usize, limit: usize },
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("QL iteration failed to converge for eigenvalue {0}")]
    QlFailure(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed spectral basis container: {0}")]
    Format(String),
}

/// Errors raised by the model, the tape and the trainer.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value produced by `{op}`")]
    NonFinite { op: &'static str },
    #[error("non-finite gradient at `{op}`")]
    NonFiniteGradient { op: &'static str },
    #[error("mask selects no nodes")]
    EmptyMask,
    #[error("invalid hyperparameter: {0}")]
    Invalid(String),
    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged {
        epoch: usize,
        reason: String,
        history: Box<crate::trainer::TrainHistory>,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed parameter container: {0}")]
    Format(String),
}

/// Errors raised by the lemma verification routines.
#[derive(Debug, Error)]
pub enum LemmaError {
    #[error("feature vector is zero")]
    ZeroVector,
    #[error("could not generate an operator with gap >= {gap_min} after {tries} tries")]
    GapTooSmall { gap_min: f64, tries: usize },
    #[error("projection weight of the chosen eigenvector vanished")]
    VanishingWeight,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Errors raised by fairness and utility metrics.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("mask selects no nodes")]
    EmptyMask,
    #[error("length mismatch: {0}")]
    Length(String),
}
