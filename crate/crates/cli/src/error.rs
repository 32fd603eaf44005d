use thiserror::Error;

use noether_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse {
        origin: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 1 for failed checks, 2 for usage and input errors, 3 when the command
    /// does not apply to the problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                CoreError::UnsolvableControl(_) | CoreError::NonPolynomial(_) => 3,
                CoreError::NecessaryConditionsFailed { .. }
                | CoreError::WeightsNotSolution
                | CoreError::AllTrialsBlewUp(_) => 1,
                _ => 2,
            },
        }
    }
}
