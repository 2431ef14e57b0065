use std::path::PathBuf;

use pseudoherm::evolution::EvolutionError;
use pseudoherm::krein::KreinError;
use pseudoherm::linalg::LinalgError;
use pseudoherm::operators::OperatorError;
use pseudoherm::spectral::SpectralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid document: {0}")]
    Parse(String),
    #[error("{0}")]
    Ambiguity(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("refused: {0}")]
    Refusal(String),
    #[error("{0} invariant check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    /// 0 success, 1 usage or parse, 2 numerical ambiguity, 3 mathematical
    /// refusal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse(_) => 1,
            CliError::Ambiguity(_) | CliError::Numerical(_) | CliError::ChecksFailed(_) => 2,
            CliError::Refusal(_) => 3,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NonConvergence(_) | LinalgError::Overflow { .. } => {
                CliError::Numerical(e.to_string())
            }
            LinalgError::Singular { .. } => CliError::Refusal(e.to_string()),
            LinalgError::InvalidTolerance(_) => CliError::Usage(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Linalg(inner) => inner.into(),
            SpectralError::ClusterAmbiguity { .. } => CliError::Ambiguity(e.to_string()),
            SpectralError::NotPaired(_)
            | SpectralError::SingularBasis
            | SpectralError::SingularMetric
            | SpectralError::NonHermitianMetric(_) => CliError::Refusal(e.to_string()),
            SpectralError::InvalidSpec(_) | SpectralError::Inconsistent(_) => {
                CliError::Parse(e.to_string())
            }
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::Linalg(inner) => inner.into(),
            OperatorError::InvalidSigns(_) | OperatorError::DimensionMismatch(..) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Refusal(e.to_string()),
        }
    }
}

impl From<KreinError> for CliError {
    fn from(e: KreinError) -> Self {
        match e {
            KreinError::Linalg(inner) => inner.into(),
            KreinError::Operator(inner) => inner.into(),
            KreinError::InvalidParams(_) | KreinError::NotOrthonormal(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Refusal(e.to_string()),
        }
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::Linalg(inner) => inner.into(),
            EvolutionError::Spectral(inner) => inner.into(),
            EvolutionError::InvalidRequest(_) => CliError::Usage(e.to_string()),
            _ => CliError::Refusal(e.to_string()),
        }
    }
}
