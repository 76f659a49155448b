use dichotomy::DichotomyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("tolerance breach: {0}")]
    Tolerance(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Precondition(_) | CliError::Output(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl From<DichotomyError> for CliError {
    fn from(e: DichotomyError) -> Self {
        use DichotomyError::*;
        let msg = e.to_string();
        match e {
            DimensionMismatch(..) | BadShape { .. } | NotPositive(_) | BadTrace(_) | NotFullRank(_) | Domain(_) => {
                CliError::Input(msg)
            }
            NoConvergence { .. } | Precondition(_) | TooLarge(_) | Undefined(_) => CliError::Precondition(msg),
            OracleInconsistency(_) => CliError::Tolerance(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
