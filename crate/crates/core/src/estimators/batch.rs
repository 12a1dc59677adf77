use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::amount::{Amount, Exact, NumericMode};
use crate::betting::{
    bernoulli_outcomes, run_episode_with, BetConstraints, BettingList, EpisodeRecord, ListSystem,
    PolicySystem, ProportionalPolicy, SystemState,
};
use crate::rng::{episode_rng, episode_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "fraction", rename_all = "snake_case")]
pub enum SystemKind {
    Labouchere,
    Fibonacci,
    /// Abstract list system betting a fixed fraction of the target, started
    /// from the total and length of the initial list.
    Proportional(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub initial_list: Vec<Exact>,
    pub p: f64,
    pub constraints: BetConstraints,
    pub episodes: usize,
    pub cutoff: usize,
    pub master_seed: u64,
    pub numeric_mode: NumericMode,
}

impl ExperimentConfig {
    /// Labouchère from `list`, unconstrained, float mode.
    pub fn labouchere(list: &[i64], p: f64, episodes: usize, cutoff: usize, master_seed: u64) -> Self {
        Self {
            system: SystemKind::Labouchere,
            initial_list: list.iter().map(|&v| Exact::from_ratio(v, 1)).collect(),
            p,
            constraints: BetConstraints::unconstrained(),
            episodes,
            cutoff,
            master_seed,
            numeric_mode: NumericMode::Float,
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |msg: String| Err(EstimatorError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if self.cutoff == 0 {
            return bad("cutoff must be at least 1".into());
        }
        if self.initial_list.is_empty() {
            return bad("initial list is empty".into());
        }
        BettingList::new(self.initial_list.iter().cloned())?;
        if let SystemKind::Proportional(f) = self.system {
            ProportionalPolicy::new(f)?;
        }
        self.constraints.check(self.initial_list.len() + self.cutoff)?;
        Ok(())
    }

    fn run_one<A: Amount>(&self, index: u64) -> Result<EpisodeRecord<A>, EstimatorError> {
        let seed = episode_seed(self.master_seed, index);
        let mut rng = episode_rng(seed);
        let outcomes = bernoulli_outcomes(&mut rng, self.p);
        let constraints = (!self.constraints.is_unconstrained()).then_some(&self.constraints);
        let list = BettingList::new(self.initial_list.iter().map(A::from_exact))?;
        let mut record = match self.system {
            SystemKind::Labouchere => {
                run_episode_with(&mut ListSystem::labouchere(list), outcomes, self.cutoff, constraints, |_| {})
            }
            SystemKind::Fibonacci => {
                run_episode_with(&mut ListSystem::fibonacci(list), outcomes, self.cutoff, constraints, |_| {})
            }
            SystemKind::Proportional(f) => {
                let state = SystemState::new(list.total().clone(), list.len())?;
                let mut sys = PolicySystem::new(state, ProportionalPolicy::new(f)?);
                run_episode_with(&mut sys, outcomes, self.cutoff, constraints, |_| {})
            }
        }?;
        record.seed = seed;
        Ok(record)
    }
}

/// Runs every episode of `config` on `workers` threads (0 means the default
/// pool). Records are in episode order.
pub fn simulate_batch<A: Amount + Send>(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<EpisodeRecord<A>>, EstimatorError> {
    config.validate()?;
    let run = || {
        (0..config.episodes as u64)
            .into_par_iter()
            .map(|i| config.run_one::<A>(i))
            .collect::<Result<Vec<_>, _>>()
    };
    if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| EstimatorError::InvalidConfig(format!("worker pool: {e}")))?
            .install(run)
    }
}

/// [`simulate_batch`] in the configured numeric mode, converted to floats.
pub fn simulate(config: &ExperimentConfig, workers: usize) -> Result<Vec<EpisodeRecord<f64>>, EstimatorError> {
    match config.numeric_mode {
        NumericMode::Float => simulate_batch::<f64>(config, workers),
        NumericMode::Exact => Ok(simulate_batch::<Exact>(config, workers)?
            .iter()
            .map(EpisodeRecord::to_f64)
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_wins_clear_one_to_four() {
        let config = ExperimentConfig::labouchere(&[1, 2, 3, 4], 1.0, 10, 100, 1);
        let records = simulate(&config, 2).unwrap();
        assert_eq!(records.len(), 10);
        for r in &records {
            assert_eq!((r.n_coups, r.b_star, r.censored), (2, 5.0, false));
        }
    }

    #[test]
    fn certain_losses_are_censored() {
        let mut config = ExperimentConfig::labouchere(&[1, 2, 3, 4], 0.0, 10, 5, 1);
        config.numeric_mode = NumericMode::Exact;
        let records = simulate_batch::<Exact>(&config, 1).unwrap();
        for r in &records {
            assert!(r.censored);
            assert_eq!((r.n_coups, r.losses), (5, 5));
            // 1,2,3,4 then 5,6,7,8,9 appended
            assert_eq!(r.final_target, Exact::from_ratio(45, 1));
        }
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let config = ExperimentConfig::labouchere(&[1, 2, 3, 4], 0.5, 500, 10_000, 42);
        let one = simulate(&config, 1).unwrap();
        let eight = simulate(&config, 8).unwrap();
        assert_eq!(one, eight);
        assert_eq!(one[7].seed, episode_seed(42, 7));
    }

    #[test]
    fn exact_and_float_agree_on_small_batches() {
        let mut config = ExperimentConfig::labouchere(&[1, 2, 3], 0.5, 50, 200, 9);
        let float = simulate(&config, 0).unwrap();
        config.numeric_mode = NumericMode::Exact;
        assert_eq!(float, simulate(&config, 0).unwrap());
    }

    #[test]
    fn fibonacci_and_proportional_run() {
        let mut config = ExperimentConfig::labouchere(&[1], 0.6, 20, 1000, 3);
        config.system = SystemKind::Fibonacci;
        assert!(simulate(&config, 0).unwrap().iter().all(|r| r.wins + r.losses == r.n_coups));
        config.system = SystemKind::Proportional(0.3);
        config.initial_list = vec![Exact::from_ratio(4, 1); 4];
        config.constraints = BetConstraints::constant_floor(0.3);
        let records = simulate(&config, 0).unwrap();
        assert!(records.iter().all(|r| r.censored || r.b_star >= 0.3 * r.t_star - 1e-9));
    }

    #[test]
    fn rejects_bad_configs() {
        let good = ExperimentConfig::labouchere(&[1], 0.5, 1, 1, 0);
        for bad in [
            ExperimentConfig { p: 1.5, ..good.clone() },
            ExperimentConfig { episodes: 0, ..good.clone() },
            ExperimentConfig { cutoff: 0, ..good.clone() },
            ExperimentConfig { initial_list: vec![], ..good.clone() },
            ExperimentConfig { initial_list: vec![Exact::from_ratio(-1, 1)], ..good.clone() },
            ExperimentConfig { system: SystemKind::Proportional(2.0), ..good.clone() },
        ] {
            assert!(simulate(&bad, 1).is_err(), "{bad:?}");
        }
    }
}
