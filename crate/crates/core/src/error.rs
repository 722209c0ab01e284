use thiserror::Error;

/// Errors raised by the library. Resource errors are kept apart from input
/// errors so callers can report them differently.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error("invalid permutation: {0}")]
    Permutation(String),
    #[error("invalid asynchronous plan: {0}")]
    Plan(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model mismatch: {0}")]
    Model(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported function kind: {0}")]
    Unsupported(String),
    #[error("action space of {count} exceeds cap {cap}")]
    ActionCap { count: u128, cap: u128 },
    #[error("state space of {count} exceeds cap {cap}")]
    StateCap { count: u128, cap: u128 },
    #[error("{count} materialized arcs exceed cap {cap}")]
    ArcCap { count: u128, cap: u128 },
    #[error("search budget of {budget} expansions exhausted")]
    Budget { budget: u64 },
}

impl Error {
    /// True for errors caused by a resource cap rather than by bad input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::ActionCap { .. } | Error::StateCap { .. } | Error::ArcCap { .. } | Error::Budget { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
