//! Heavy-tail fits and burstiness of run-length samples.

mod burst;
mod powerlaw;
mod zeta;

use thiserror::Error;

pub use burst::{burstiness, burstiness_tail, BurstinessResult};
pub use powerlaw::{fit_power_law, FitConfig, PowerLawFit, DEFAULT_MIN_SAMPLES, DEFAULT_XMIN_QUANTILE};
pub use zeta::hurwitz_zeta;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("too few samples for a power-law fit: {n} < {min}")]
    TooFewSamples { n: usize, min: usize },
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("run lengths must be positive")]
    NonPositive,
}
