use thiserror::Error;

/// Errors surfaced by the library.
///
/// Usage errors mean the caller handed us inconsistent arguments; resource
/// and runtime errors mean a valid request could not be completed. The CLI
/// maps the former to exit code 1 and the latter to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("side mismatch: {left} vs {right}")]
    SideMismatch { left: u32, right: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("policy parse error: unrecognized token `{token}` in `{input}`")]
    PolicyParse { token: String, input: String },

    #[error("resolved shape has {actual_n} nodes, exceeding the node budget of {budget}")]
    NodeBudgetExceeded { actual_n: u64, budget: u64 },

    #[error("non-finite cost at d = {at}")]
    NonFiniteCost { at: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad caller input rather than runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::SideMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::PolicyParse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
