use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("joint distribution is not normalized: components sum to {sum}")]
    NonNormalized { sum: f64 },

    #[error("negative probability {value} in cell {cell}")]
    NegativeProbability { cell: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no CHSH violation: S = {s} does not exceed 2")]
    NoViolation { s: f64 },

    #[error("delta {index} = {delta} violates |delta * E| <= 1 with E = {correlation}")]
    DeltaOutOfRange {
        index: usize,
        delta: f64,
        correlation: f64,
    },

    #[error("no coincidences recorded for setting pair {pair}")]
    NoCoincidences { pair: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Checks that `p` is a finite probability.
pub(crate) fn check_probability(name: &str, p: f64) -> Result<f64> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(invalid(format!("{name} = {p} is not in [0, 1]")))
    }
}
