use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("solver failed at step {step}, site {site}: {source}")]
    Site {
        step: usize,
        site: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("solver failed at step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {rep} failed: {source}")]
    Replication {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn non_finite(msg: impl Into<String>) -> Self {
        Error::NonFinite(msg.into())
    }

    pub fn at_site(self, step: usize, site: usize) -> Self {
        Error::Site {
            step,
            site,
            source: Box::new(self),
        }
    }

    pub fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// True for failures caused by caller-supplied values rather than numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidArgument(_) | Error::Dimension { .. } => true,
            Error::Site { source, .. }
            | Error::Step { source, .. }
            | Error::Replication { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// True for filesystem and serialization failures.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) | Error::Serde(_) => true,
            Error::Site { source, .. }
            | Error::Step { source, .. }
            | Error::Replication { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
