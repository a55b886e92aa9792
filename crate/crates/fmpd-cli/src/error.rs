use std::path::PathBuf;

use fmpd::FinslerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Finsler(#[from] FinslerError),

    #[error("malformed CSV {path}: {reason}")]
    Csv { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("verification failed: {0}")]
    VerifyFailed(String),

    #[error("run ended early: {label}")]
    Terminated { label: String, code: u8 },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Csv { .. } => 2,
            CliError::VerifyFailed(_) => 5,
            CliError::Terminated { code, .. } => *code,
            CliError::Finsler(e) => match e {
                FinslerError::ClosureSingularity { .. }
                | FinslerError::ObserverDegeneracy { .. }
                | FinslerError::NullDirection { .. }
                | FinslerError::GeometryDegeneracy { .. }
                | FinslerError::EvaluationFailure { .. } => 3,
                FinslerError::Stiffness { .. } => 4,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_failure_class() {
        let sing = FinslerError::ClosureSingularity { scalar: "Σ", value: 0.0, guard: 1e-12 };
        let stiff = FinslerError::Stiffness { tau: 1.0, step: 1e-13 };
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(FinslerError::Construction("b".into())).exit_code(), 2);
        assert_eq!(CliError::from(sing).exit_code(), 3);
        assert_eq!(CliError::from(stiff).exit_code(), 4);
        assert_eq!(CliError::VerifyFailed("bianchi".into()).exit_code(), 5);
    }
}
