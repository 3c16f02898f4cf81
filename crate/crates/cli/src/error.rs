use std::path::PathBuf;

use thiserror::Error;

use fugnn_core::error::{EigenError, GraphError, LemmaError, ModelError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 1 usage or input problem, 2 numerical failure, 3 failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } | CliError::Graph(_) => 1,
            CliError::Eigen(e) => eigen_code(e),
            CliError::Model(e) => match e {
                ModelError::NonFinite { .. }
                | ModelError::NonFiniteGradient { .. }
                | ModelError::Diverged { .. } => 2,
                ModelError::Eigen(e) => eigen_code(e),
                _ => 1,
            },
            CliError::Lemma(e) => match e {
                LemmaError::Invalid(_) => 1,
                LemmaError::Eigen(e) => eigen_code(e),
                _ => 2,
            },
            CliError::Verification(_) => 3,
        }
    }
}

fn eigen_code(e: &EigenError) -> i32 {
    match e {
        EigenError::NoConvergence { .. } | EigenError::QlFailure(_) => 2,
        _ => 1,
    }
}

pub fn io_err(path: &std::path::Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}
