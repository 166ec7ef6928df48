use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design space: {0}")]
    Space(String),

    #[error("value for `{name}` out of range: {detail}")]
    OutOfRange { name: String, detail: String },

    #[error("dimension mismatch ({what}): expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },

    #[error("invalid kernel hyperparameters: {0}")]
    Kernel(String),

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("search space exhausted: every candidate has already been evaluated")]
    Exhausted,

    #[error("cannot enumerate space: {0}")]
    Enumeration(String),

    #[error("cannot embed network: {0}")]
    Embed(String),

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("model document error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    ///
    /// 2 for configuration problems, 3 for data problems, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Space(_) | Error::Json(_) | Error::InvalidArgument(_) => 2,
            Error::Data(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Model(_)
            | Error::Dimension { .. }
            | Error::OutOfRange { .. } => 3,
            Error::Kernel(_)
            | Error::Factorization(_)
            | Error::Exhausted
            | Error::Enumeration(_)
            | Error::Embed(_)
            | Error::Objective(_) => 4,
        }
    }
}
