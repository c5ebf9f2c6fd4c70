//! Error types shared across the crate.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a precondition (non-positive time constant,
    /// too-coarse sample interval, too-short trace, ...).
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Per-sample click probability reached the Bernoulli-thinning limit.
    #[error("detection probability {p:.3} at sample {sample} exceeds 0.1; lower flux or dt")]
    RateTooHigh { sample: usize, p: f64 },

    /// Too many intensity samples had to be clamped at zero.
    #[error("intensity clamp rate {fraction:.4} exceeds 0.001; alpha too large for this model")]
    ClampRateExceeded { fraction: f64 },

    /// The interferometric delay must be an integer multiple of the sample interval.
    #[error("delay {delta:.3e} s is not on the sample grid (dt = {dt:.3e} s)")]
    DeltaNotOnGrid { delta: f64, dt: f64 },

    /// The input trace is too short for the requested transform or estimate.
    #[error("trace too short: need at least {needed} samples, got {got}")]
    TraceTooShort { needed: usize, got: usize },

    /// Tag streams handed to the correlator must be sorted in time.
    #[error("tag stream on channel {channel} is not sorted at index {index}")]
    UnsortedTags { channel: u32, index: usize },

    /// Cross-correlated streams must cover the same record duration.
    #[error("stream durations differ: {a:.6e} s vs {b:.6e} s")]
    DurationMismatch { a: f64, b: f64 },

    /// Histograms can only be merged when binning and window agree.
    #[error("histogram shapes differ: {message}")]
    ShapeMismatch { message: String },

    /// A fit or estimate does not have enough counts to be meaningful.
    #[error("insufficient statistics: {message}")]
    InsufficientStatistics { message: String },

    /// The least-squares optimizer exhausted its iteration budget.
    #[error("fit did not converge after {iterations} iterations (chi2 = {chi2:.6e})")]
    NonConvergence { iterations: usize, chi2: f64 },

    /// A binary or CSV artifact is malformed.
    #[error("format error: {message}")]
    Format { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    /// Process exit code a CLI should use for this error: 2 validation,
    /// 3 insufficient statistics, 4 I/O and format trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::RateTooHigh { .. }
            | Error::ClampRateExceeded { .. }
            | Error::DeltaNotOnGrid { .. }
            | Error::TraceTooShort { .. }
            | Error::UnsortedTags { .. }
            | Error::DurationMismatch { .. }
            | Error::ShapeMismatch { .. } => 2,
            Error::InsufficientStatistics { .. } | Error::NonConvergence { .. } => 3,
            Error::Format { .. } | Error::Io(_) => 4,
        }
    }
}

/// Validate that `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {value}")))
    }
}

/// Validate that `value` is finite and non-negative.
pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be >= 0, got {value}")))
    }
}

pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Error {
    Error::invalid(name, message)
}
