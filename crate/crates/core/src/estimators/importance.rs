use serde::Serialize;

use super::EstimatorError;
use crate::amount::neumaier_sum;
use crate::betting::EpisodeRecord;

/// Likelihood ratio of a completed path under `p_target` against `p_sim`.
pub fn importance_weight<A>(record: &EpisodeRecord<A>, p_target: f64, p_sim: f64) -> Result<f64, EstimatorError> {
    if record.censored {
        return Err(EstimatorError::CensoredRecord { seed: record.seed });
    }
    check_probabilities(p_target, p_sim)?;
    Ok(log_weight(record.wins, record.losses, p_target, p_sim).exp())
}

fn check_probabilities(p_target: f64, p_sim: f64) -> Result<(), EstimatorError> {
    if !(p_sim > 0.0 && p_sim < 1.0) {
        return Err(EstimatorError::InvalidConfig(format!("p_sim = {p_sim} must lie in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&p_target) {
        return Err(EstimatorError::InvalidConfig(format!("p_target = {p_target} outside [0, 1]")));
    }
    Ok(())
}

fn log_weight(wins: usize, losses: usize, p_target: f64, p_sim: f64) -> f64 {
    // 0 * ln 0 is taken as 0
    let term = |k: usize, num: f64, den: f64| if k == 0 { 0.0 } else { k as f64 * (num / den).ln() };
    term(wins, p_target, p_sim) + term(losses, 1.0 - p_target, 1.0 - p_sim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    BStar,
    TStar,
    SumBets,
    NCoups,
    One,
}

impl Statistic {
    pub fn of(self, r: &EpisodeRecord<f64>) -> f64 {
        match self {
            Statistic::BStar => r.b_star,
            Statistic::TStar => r.t_star,
            Statistic::SumBets => r.sum_bets,
            Statistic::NCoups => r.n_coups as f64,
            Statistic::One => 1.0,
        }
    }

    /// Largest win probability at which the expectation is infinite.
    fn divergence_threshold(self) -> Option<f64> {
        match self {
            Statistic::BStar | Statistic::TStar | Statistic::SumBets => Some(0.5),
            Statistic::NCoups => Some(1.0 / 3.0),
            Statistic::One => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImportanceEstimate {
    /// `Σ w x / n` over all records, censored ones contributing zero.
    pub unnormalized: f64,
    pub unnormalized_se: f64,
    /// `Σ w x / Σ w` over completed records.
    pub self_normalized: f64,
    pub self_normalized_se: f64,
    /// `(Σ w)² / Σ w²`.
    pub ess: f64,
    pub weight_mean: f64,
    pub weight_se: f64,
    pub used: usize,
    pub excluded_censored: usize,
}

/// Estimates `E[statistic]` at `p_target` from records drawn at `p_sim`.
pub fn importance_sampling_mean(
    records: &[EpisodeRecord<f64>],
    p_sim: f64,
    p_target: f64,
    statistic: Statistic,
    ess_floor: f64,
) -> Result<ImportanceEstimate, EstimatorError> {
    check_probabilities(p_target, p_sim)?;
    if let Some(threshold) = statistic.divergence_threshold() {
        if p_target <= threshold {
            return Err(EstimatorError::InfiniteTarget { p_target });
        }
    }
    if records.is_empty() {
        return Err(EstimatorError::EmptySamples);
    }
    let n = records.len() as f64;
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            if r.censored {
                (0.0, 0.0)
            } else {
                (log_weight(r.wins, r.losses, p_target, p_sim).exp(), statistic.of(r))
            }
        })
        .collect();
    let used = records.iter().filter(|r| !r.censored).count();
    let sum_w = neumaier_sum(pairs.iter().map(|p| p.0));
    let sum_w2 = neumaier_sum(pairs.iter().map(|p| p.0 * p.0));
    let ess = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
    if ess < ess_floor {
        return Err(EstimatorError::DegenerateWeights { ess, floor: ess_floor });
    }
    let se_of = |vals: &mut dyn Iterator<Item = f64>, mean: f64| {
        let ss = neumaier_sum(vals.map(|v| (v - mean) * (v - mean)));
        if n > 1.0 {
            (ss / (n - 1.0) / n).sqrt()
        } else {
            0.0
        }
    };
    let weight_mean = sum_w / n;
    let weight_se = se_of(&mut pairs.iter().map(|p| p.0), weight_mean);
    let unnormalized = neumaier_sum(pairs.iter().map(|(w, x)| w * x)) / n;
    let unnormalized_se = se_of(&mut pairs.iter().map(|(w, x)| w * x), unnormalized);
    let self_normalized = neumaier_sum(pairs.iter().map(|(w, x)| w * x)) / sum_w;
    // delta method
    let self_normalized_se =
        neumaier_sum(pairs.iter().map(|(w, x)| (w * (x - self_normalized)).powi(2))).sqrt() / sum_w;
    Ok(ImportanceEstimate {
        unnormalized,
        unnormalized_se,
        self_normalized,
        self_normalized_se,
        ess,
        weight_mean,
        weight_se,
        used,
        excluded_censored: records.len() - used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(wins: usize, losses: usize, b_star: f64) -> EpisodeRecord<f64> {
        EpisodeRecord {
            n_coups: wins + losses,
            b_star,
            t_star: b_star,
            sum_bets: b_star,
            wins,
            losses,
            censored: false,
            final_target: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(importance_weight(&rec(3, 4, 1.0), 0.5, 0.5).unwrap(), 1.0);
        assert!((importance_weight(&rec(1, 0, 1.0), 0.6, 0.5).unwrap() - 1.2).abs() < 1e-12);
        assert!((importance_weight(&rec(2, 1, 1.0), 0.6, 0.5).unwrap() - 1.152).abs() < 1e-12);
        assert!((importance_weight(&rec(0, 3, 1.0), 0.0, 0.5).unwrap() - 8.0).abs() < 1e-12);
        let mut c = rec(1, 1, 1.0);
        c.censored = true;
        assert!(matches!(importance_weight(&c, 0.6, 0.5), Err(EstimatorError::CensoredRecord { .. })));
        assert!(importance_weight(&rec(1, 1, 1.0), 0.6, 1.0).is_err());
    }

    #[test]
    fn long_paths_do_not_overflow() {
        let w = importance_weight(&rec(40_000, 80_000, 1.0), 0.6, 0.5).unwrap();
        assert!(w.is_finite() && w >= 0.0);
    }

    #[test]
    fn equal_probabilities_give_the_plain_mean() {
        let records: Vec<_> = (1..=10).map(|k| rec(k, k, k as f64)).collect();
        let est = importance_sampling_mean(&records, 0.55, 0.55, Statistic::BStar, 1.0).unwrap();
        assert!((est.unnormalized - 5.5).abs() < 1e-12);
        assert!((est.self_normalized - 5.5).abs() < 1e-12);
        assert!((est.ess - 10.0).abs() < 1e-12);
        assert_eq!(est.weight_se, 0.0);
    }

    #[test]
    fn guards() {
        let records = vec![rec(1, 0, 1.0)];
        assert!(matches!(
            importance_sampling_mean(&records, 0.5, 0.45, Statistic::BStar, 0.0),
            Err(EstimatorError::InfiniteTarget { .. })
        ));
        assert!(importance_sampling_mean(&records, 0.5, 0.45, Statistic::One, 0.0).is_ok());
        let skewed = vec![rec(30, 0, 1.0), rec(0, 30, 1.0), rec(0, 30, 1.0)];
        assert!(matches!(
            importance_sampling_mean(&skewed, 0.5, 0.9, Statistic::One, 2.0),
            Err(EstimatorError::DegenerateWeights { .. })
        ));
    }
}
