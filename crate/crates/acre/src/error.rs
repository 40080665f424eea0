use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("root solve failed for {equation}: {reason}")]
    Solver { equation: String, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("internal consistency: {0}")]
    Consistency(String),
    #[error("config: {0}")]
    Config(String),
    #[error("degree {j}: {source}")]
    Degree {
        j: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn at_degree(self, j: usize) -> Self {
        Error::Degree { j, source: Box::new(self) }
    }

    /// The innermost error with degree wrappers peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Degree { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
