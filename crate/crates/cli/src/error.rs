use minimal_annuli::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("bad configuration: {0}")]
    Config(String),

    #[error("bad input: {0}")]
    Input(String),

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Output(_) => 1,
            CliError::Core(e) => match e {
                Error::InvalidParameter(_) | Error::OutOfRange { .. } | Error::Configuration(_) => 2,
                Error::Precondition(_) | Error::InvalidData(_) | Error::BranchPoint { .. } | Error::Domain(_) => 3,
                Error::NonConvergence { .. } | Error::Resolution { .. } => 4,
            },
        }
    }

    /// Residual dump for non-convergence, as one JSON line.
    pub fn residual_dump(&self) -> Option<String> {
        let v = match self {
            CliError::Core(Error::NonConvergence { what, residual }) => {
                serde_json::json!({ "error": "non_convergence", "what": what, "residual": residual })
            }
            CliError::Core(Error::Resolution { what, disagreement }) => {
                serde_json::json!({ "error": "resolution", "what": what, "disagreement": disagreement })
            }
            _ => return None,
        };
        Some(v.to_string())
    }
}
