//! Monte Carlo batches and the statistics computed from them.
//!
//! A batch is a deterministic function of its [`ExperimentConfig`]: episode
//! `i` draws its coups from a stream seeded by `(master_seed, i)`, and records
//! come back in episode order whatever the number of workers.

mod batch;
mod growth;
mod importance;
mod tail;

use thiserror::Error;

use crate::betting::BettingError;

pub use batch::{simulate, simulate_batch, ExperimentConfig, SystemKind};
pub use growth::{growth_classifier, GrowthFit, GrowthLabel, MIN_DECADES, MIN_GRID_POINTS};
pub use importance::{importance_sampling_mean, importance_weight, ImportanceEstimate, Statistic};
pub use tail::{
    doob_check, empirical_survival, growth_per_doubling, log_grid, mean_with_se, moment_transform_curves, phi_log_damped,
    phi_x_log_x, truncated_mean, truncated_mean_curve, CurvePoint, DoobPoint, DoobVerdict,
    MomentCurves, Samples,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no samples")]
    EmptySamples,
    #[error("grid too small: {0}")]
    InsufficientGrid(String),
    #[error("censored record (seed {seed}) has no likelihood ratio")]
    CensoredRecord { seed: u64 },
    #[error("effective sample size {ess:.1} below floor {floor}")]
    DegenerateWeights { ess: f64, floor: f64 },
    #[error("expectation is infinite at p = {p_target}")]
    InfiniteTarget { p_target: f64 },
    #[error(transparent)]
    Betting(#[from] BettingError),
}
