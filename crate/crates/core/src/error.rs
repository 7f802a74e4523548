use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by core operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("degenerate test: {0}")]
    DegenerateTest(String),
    #[error("case {case_id} cannot be used: {reason}")]
    CaseBuild { case_id: String, reason: String },
    #[error("incomplete answer sheet, missing items: {0:?}")]
    IncompleteSheet(Vec<String>),
    #[error("invalid pairing: {0}")]
    InvalidPairing(String),
    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("backend: {0}")]
    Backend(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn with_seed(self, seed: u64) -> Self {
        Error::Seed {
            seed,
            source: alloc::boxed::Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
