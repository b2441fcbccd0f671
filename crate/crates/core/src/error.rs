use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition on sizes, indices or parameters was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A variance profile failed validation.
    #[error("invalid variance profile: {0}")]
    InvalidProfile(String),

    /// An iterative or guarded computation could not deliver a trustworthy value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A configuration file or descriptor could not be interpreted.
    #[error("configuration error: {0}")]
    Config(String),

    /// A Monte Carlo replica failed; carries enough to reproduce it.
    #[error("replica {replica} (master seed {seed}) failed: {source}")]
    Replica {
        replica: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a numerical breakdown.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidProfile(_) => true,
            Error::Replica { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Config(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
