//! Crate-level error and its process exit codes.

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::kernels::KernelError;
use crate::quadrature::QuadratureError;
use crate::sim::SimError;
use crate::solver::SolverError;

/// Exit code for malformed or infeasible configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failure of a solver, quadrature or fit.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit code for I/O failures and violated simulation invariants.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Kernel(_) | Error::Json(_) => EXIT_CONFIG,
            Error::Solver(_) | Error::Quadrature(_) => EXIT_NUMERICAL,
            Error::Sim(SimError::InfeasibleSeed { .. } | SimError::InvalidConfig(_) | SimError::Kernel(_)) => EXIT_CONFIG,
            Error::Sim(_) => EXIT_RUNTIME,
            Error::Analysis(AnalysisError::MalformedTable(_) | AnalysisError::Csv(_) | AnalysisError::BoundBelowSeam { .. }) => {
                EXIT_CONFIG
            }
            Error::Analysis(AnalysisError::Io(_)) | Error::Io(_) => EXIT_RUNTIME,
            Error::Analysis(_) => EXIT_NUMERICAL,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(Error::Config("x".into()).exit_code(), EXIT_CONFIG);
        assert_eq!(Error::from(serde_json::from_str::<u8>("{").unwrap_err()).exit_code(), EXIT_CONFIG);
        assert_eq!(Error::from(QuadratureError::NoConvergence { estimate: 0.0, spread: 1.0 }).exit_code(), EXIT_NUMERICAL);
        assert_eq!(Error::from(QuadratureError::Divergent { at: 0.0 }).exit_code(), EXIT_NUMERICAL);
        assert_eq!(Error::from(SolverError::SingularSystem).exit_code(), EXIT_NUMERICAL);
        assert_eq!(Error::from(SimError::Deadlock { step: 1 }).exit_code(), EXIT_RUNTIME);
        assert_eq!(Error::from(SimError::InvalidConfig("x".into())).exit_code(), EXIT_CONFIG);
        assert_eq!(Error::from(AnalysisError::DegenerateTail).exit_code(), EXIT_NUMERICAL);
        assert_eq!(Error::from(AnalysisError::MalformedTable("x".into())).exit_code(), EXIT_CONFIG);
    }
}
