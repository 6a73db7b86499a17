use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid market: {0}")]
    InvalidMarket(String),
    #[error("invalid preference profile: {0}")]
    InvalidProfile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inconsistent matching: {0}")]
    Inconsistent(String),
    #[error("market {num_doctors}x{num_hospitals} exceeds the enumeration guard of {limit} agents per side")]
    SizeGuard {
        num_doctors: usize,
        num_hospitals: usize,
        limit: usize,
    },
    #[error("stable set is empty")]
    EmptyStableSet,
    #[error("no trials")]
    NoTrials,
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
