//! Polarity–return coupling: impact groups, correlations, distribution drift,
//! Granger tests and the external emotion join.

mod correlation;
mod granger;
mod impact;
mod kl;

use thiserror::Error;

pub use correlation::{
    emotion_correlation, market_correlation, read_emotion, stock_day_correlation, EmotionCorrelation,
    MarketCorrelation, PeriodCorrelation, DEFAULT_MIN_ALIGNED_BARS, MIN_EMOTION_DAYS,
};
pub use granger::{
    granger_market, granger_pass_rates, granger_test, Direction, DirectionSummary, GrangerConfig,
    GrangerDayResult, GrangerReport, GrangerTest, ReturnMode, SkipReason, SkippedDay, DEFAULT_MAX_LAG,
    DEFAULT_MIN_OBS, SIGNIFICANCE,
};
pub use impact::{impact_pairs, price_impact_groups, split_by_sign, ImpactGroups};
pub use kl::{daily_corr_dists, kl_chain, kl_divergence, BinGrid, CorrDist, DEFAULT_BINS, DEFAULT_PSEUDO_COUNT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("histogram grids differ: {left} vs {right} bins")]
    GridMismatch { left: usize, right: usize },
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}
