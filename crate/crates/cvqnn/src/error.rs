use std::path::PathBuf;

/// Errors surfaced by the CLI, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Missing, unreadable or malformed input data. Exit 2.
    #[error("data error: {0}")]
    Data(String),
    /// Bad flags, config file entries or argument combinations. Exit 3.
    #[error("config error: {0}")]
    Config(String),
    /// Non-finite loss or an out-of-range simulation. Exit 4.
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) | CliError::Read { .. } => 2,
            CliError::Config(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Write { .. } => 1,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Read { path: path.into(), source }
    }

    pub fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Write { path: path.into(), source }
    }
}

impl From<cvqnn_core::Error> for CliError {
    fn from(e: cvqnn_core::Error) -> Self {
        use cvqnn_core::Error as E;
        match e {
            E::InvalidArgument(_) => CliError::Config(e.to_string()),
            E::Overflow(_) | E::NumericFailure(_) => CliError::Numeric(e.to_string()),
            E::InvalidData(_) | E::InsufficientData(_) | E::UndefinedMetric(_) | E::StratificationInfeasible(_) => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("malformed JSON: {e}"))
    }
}
