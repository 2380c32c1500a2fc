use thiserror::Error;

/// Failures of a CLI run, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration. Exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// A solver or trainer did not converge or produced non-finite values.
    /// Exit code 1.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Output { .. } => 1,
        }
    }

    pub fn field(name: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Config(format!("field `{name}`: {msg}"))
    }
}

impl From<iblab::Error> for CliError {
    fn from(e: iblab::Error) -> Self {
        use iblab::Error as E;
        match e {
            E::InvalidArgument(_)
            | E::UnknownTask(_)
            | E::DimensionMismatch { .. }
            | E::EmptyInput
            | E::ClassTooSmall { .. }
            | E::InvalidDistribution(_)
            | E::Json(_) => CliError::Config(e.to_string()),
            E::Diverged { .. } | E::InfiniteDivergence { .. } | E::UndefinedSlope | E::Io(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
