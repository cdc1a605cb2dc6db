use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The closed-form model is singular at the requested point.
    #[error("singularity: {0}")]
    Singularity(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty trial: {0}")]
    EmptyTrial(&'static str),
    /// A batch whose estimator variance is exactly zero; the advantage would be infinite.
    #[error("degenerate batch: {0}")]
    Degenerate(&'static str),
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by a bad configuration file or bad flags.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::Parse(_) | Error::Io(_) | Error::Precondition(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
