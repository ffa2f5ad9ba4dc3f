use thiserror::Error;

/// Errors produced by the schedulers, allocators and the experiment driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical quantity was outside its domain (non-positive capacity,
    /// negative backlog, non-finite value, ...).
    #[error("{what} must be {constraint}, got {value}")]
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },

    /// Both backlogs are zero, so there is no backlog ray to follow.
    #[error("backlog (0, 0) has no direction; nothing left to schedule")]
    EmptyBacklog,

    /// A probability vector failed validation.
    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("water filling needs at least one channel")]
    NoChannels,

    /// A simulation or search loop hit its iteration guard.
    #[error("{what} did not finish within {cap} slots")]
    SlotCapExceeded { what: &'static str, cap: usize },

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            constraint: "finite and > 0",
            value,
        })
    }
}

pub(crate) fn non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            constraint: "finite and >= 0",
            value,
        })
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
