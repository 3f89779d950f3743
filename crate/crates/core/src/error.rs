use std::io;

use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field violates its invariant; `field` names it.
    #[error("{field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("no energy-conserving idler for pump {pump_nm} nm and signal {signal_nm} nm")]
    NoIdler { pump_nm: f64, signal_nm: f64 },

    /// A ratio whose denominator vanished (SNR with no background, g² with no singles, ...).
    #[error("{0}")]
    Undefined(&'static str),

    #[error("time-tag stream is not sorted at index {index}")]
    UnsortedStream { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad scene: {0}")]
    BadScene(String),

    #[error("malformed tag file: {0}")]
    BadTagFile(String),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
