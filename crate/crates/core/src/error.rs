use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange { what: &'static str, index: u64, limit: u64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate reward range: min {min} equals max {max}")]
    DegenerateRange { min: f64, max: f64 },

    #[error("meta-action {action} cannot be used with {case} meta-states")]
    CaseMismatch { case: &'static str, action: &'static str },

    #[error("{0} exceeds representable range")]
    Overflow(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("transition row for state {state}, action {action} has zero mass")]
    ZeroMass { state: usize, action: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_index(what: &'static str, index: usize, limit: usize) -> Result<()> {
    if index < limit {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            what,
            index: index as u64,
            limit: limit as u64,
        })
    }
}
