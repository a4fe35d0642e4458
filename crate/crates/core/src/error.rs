use thiserror::Error;

/// Pipeline stage at which signed recovery stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryStage {
    GridSolve,
    Clustering,
    Refinement,
    Feasibility,
    AtomCount,
    SignPattern,
    Certification,
}

impl std::fmt::Display for RecoveryStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RecoveryStage::GridSolve => "grid solve",
            RecoveryStage::Clustering => "clustering",
            RecoveryStage::Refinement => "refinement",
            RecoveryStage::Feasibility => "feasibility",
            RecoveryStage::AtomCount => "atom count",
            RecoveryStage::SignPattern => "sign pattern",
            RecoveryStage::Certification => "certification",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("validation failed: {0}")]
    ValidationFailure(String),

    #[error("signed recovery failed at {stage}: {detail}")]
    RecoveryFailure {
        stage: RecoveryStage,
        detail: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn recovery(stage: RecoveryStage, detail: impl Into<String>) -> Self {
        Error::RecoveryFailure {
            stage,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
