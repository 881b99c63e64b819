use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Solver(#[from] fairshare::Error),

    #[error("certificate not met: {0}")]
    Certificate(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        use fairshare::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(E::Internal(_) | E::NonFinite(_)) => 3,
            CliError::Solver(E::Io(_)) => 1,
            CliError::Solver(_) => 2,
            CliError::Certificate(_) => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
