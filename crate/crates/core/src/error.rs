use thiserror::Error;

/// Errors produced by the library and the command-line driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("wrong space: expected {expected}, found {found}")]
    WrongSpace {
        expected: &'static str,
        found: &'static str,
    },

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("matrix is singular to working precision ({0})")]
    Singular(String),

    #[error("linear solve missed the residual contract: relative residual {0:.3e}")]
    ResidualContract(f64),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }
}
