//! Exact state machines for list betting systems.
//!
//! Two concrete systems are provided: the Labouchère (cancellation) system,
//! which bets the sum of the first and last entries of its list, and the
//! Fibonacci system, which works on the last two entries. Both are instances
//! of the abstract list system that tracks only the remaining target `T` and
//! the list length `l`; [`list_system_step`] implements that abstract engine
//! and [`PolicySystem`] drives it with an arbitrary betting policy.

mod constraints;
mod episode;
mod list;
mod state;

use thiserror::Error;

pub use constraints::{
    proportion_cap, validate_bet, BetConstraints, BetViolation, LinearFloor, ProportionBound,
};
pub use episode::{
    bernoulli_outcomes, run_episode, run_episode_with, BetPolicy, BettingProcess, Coup,
    EpisodeRecord, ListRule, ListSystem, PolicySystem, ProportionalPolicy,
};
pub use list::{
    fibonacci_bet, fibonacci_step, is_good_list, labouchere_bet, labouchere_step, BettingList,
};
pub use state::{list_system_step, Outcome, SystemState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BettingError {
    #[error("operation requires a non-empty list")]
    EmptyList,
    #[error("list entry {index} is not strictly positive ({value})")]
    NonPositiveEntry { index: usize, value: String },
    #[error("bet {bet} outside [0, {target}]")]
    BetOutOfRange { bet: String, target: String },
    #[error("length {length} forces a full bet of {target}, got {bet}")]
    TerminationViolation {
        length: usize,
        bet: String,
        target: String,
    },
    #[error("the system has already terminated")]
    AlreadyTerminated,
    #[error("list length must be at least 1")]
    InvalidLength,
    #[error("bet rejected at coup {coup}: {violation}")]
    ConstraintViolated { coup: usize, violation: BetViolation },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
