//! Synthetic order flow and prices with known ground truth, plus a naive
//! recount used as an oracle for the polarity pipeline.

mod generate;
mod oracle;
mod samplers;
mod scenario;

use std::path::PathBuf;

use thiserror::Error;

pub use generate::{generate, stock_id, write_scenario, GroundTruth, Scenario, ScenarioFiles};
pub use oracle::{brute_force_recount, Recount};
pub use samplers::{correlated_normals, discrete_power_law, exponential, lagged_pair};
pub use scenario::{CountModel, IndexSpec, RegimeSpec, ScenarioSpec, DEFAULT_INDEX_ID};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Spec(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}
