use std::path::PathBuf;

use lablab::NumericMode;

use crate::config::Config;

pub mod bellman;
pub mod report;
pub mod simulate;
pub mod stopping;
pub mod tail;

/// Global options shared by every subcommand.
pub struct Ctx {
    pub config: Config,
    pub out: PathBuf,
    pub workers: usize,
    pub numeric: Option<NumericMode>,
    pub seed: Option<u64>,
}
