//! Exact law of the stopping time `N`.
//!
//! The length update of a list system does not depend on the bets: a loss
//! moves `l` to `l + 1` and a win moves it to `(l - 2)+`. The stopping time
//! is therefore the first time this walk reaches zero, and its law follows
//! from a forward recursion on the distribution of the length alone. Mass
//! that reaches zero at coup `n` is credited to `{N = n}` and removed, so the
//! absorbing state is never revisited.
//!
//! For `p > 1/3` the survival function decays like
//! `D(n mod 3) n^{-3/2} ρ^{n/3}` with `ρ = 27/4 p (1-p)^2`; [`asymptotic_fit`]
//! measures how flat the ratio to that envelope is in each residue class.

use thiserror::Error;

use crate::amount::{neumaier_sum, Amount};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoppingError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("p <= 1/3 (rho = {rho}); the survival tail does not decay geometrically")]
    RhoAtLeastOne { rho: f64 },
    #[error("window [{lo}, {hi}] needs survival up to n = {needed}, table stops at {n_max}")]
    WindowOutOfRange {
        lo: usize,
        hi: usize,
        needed: usize,
        n_max: usize,
    },
    #[error("survival underflows to zero at n = {n}")]
    SurvivalUnderflow { n: usize },
    #[error("E[N] is infinite for p = {p} <= 1/3")]
    DivergentMean { p: f64 },
    #[error("truncation bound {bound} still above tolerance after {steps} steps")]
    NotConverged { steps: usize, bound: f64 },
}

/// `27/4 · p(1-p)^2`.
pub fn rho<A: Amount>(p: &A) -> A {
    let q = A::one() - p.clone();
    A::from_ratio(27, 4) * p.clone() * q.clone() * q
}

/// `P(N >= n)` for `n = 0..=n_max`, together with `P(N = n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTable<A> {
    pub l0: usize,
    pub p: A,
    /// `survival[n] = P(N >= n)`.
    pub survival: Vec<A>,
    /// `absorbed[n] = P(N = n)`; `absorbed[0] = 0`.
    pub absorbed: Vec<A>,
    /// `alive[n] = P(N > n)`, the unabsorbed mass after `n` coups.
    pub alive: Vec<A>,
}

impl<A: Amount> SurvivalTable<A> {
    pub fn n_max(&self) -> usize {
        self.survival.len() - 1
    }

    /// `(n, P(N >= n))` for every `n` with `n % 3 == residue`.
    pub fn residue_rows(&self, residue: usize) -> impl Iterator<Item = (usize, &A)> {
        self.survival
            .iter()
            .enumerate()
            .filter(move |(n, _)| n % 3 == residue % 3)
    }

    /// Largest `|Σ_{m<=n} P(N = m) + P(N > n) - 1|` over the table.
    pub fn conservation_error(&self) -> f64 {
        let mut absorbed = A::zero();
        let mut worst = 0.0f64;
        for (n, alive) in self.alive.iter().enumerate() {
            absorbed = absorbed + self.absorbed[n].clone();
            let total = absorbed.clone() + alive.clone();
            worst = worst.max((total.to_f64() - 1.0).abs());
            if total != A::one() && total.as_exact().is_some() {
                return f64::INFINITY;
            }
        }
        worst
    }

    pub fn to_f64(&self) -> SurvivalTable<f64> {
        SurvivalTable {
            l0: self.l0,
            p: self.p.to_f64(),
            survival: self.survival.iter().map(Amount::to_f64).collect(),
            absorbed: self.absorbed.iter().map(Amount::to_f64).collect(),
            alive: self.alive.iter().map(Amount::to_f64).collect(),
        }
    }
}

impl SurvivalTable<f64> {
    /// A table built from given survival values, e.g. a synthetic envelope.
    pub fn from_survival(l0: usize, p: f64, survival: Vec<f64>) -> Self {
        let mut absorbed = vec![0.0; survival.len()];
        let mut alive = vec![0.0; survival.len()];
        for n in 0..survival.len() {
            alive[n] = survival.get(n + 1).copied().unwrap_or(0.0);
            if n >= 1 {
                absorbed[n] = survival[n] - alive[n];
            }
        }
        Self {
            l0,
            p,
            survival,
            absorbed,
            alive,
        }
    }
}

fn check_probability<A: Amount>(p: &A) -> Result<(), StoppingError> {
    if *p < A::zero() || *p > A::one() {
        return Err(StoppingError::InvalidConfig(format!("p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// One coup of the length walk: returns the mass absorbed at this coup.
/// `dist[l]` is the probability of length `l`; index 0 stays empty.
fn advance<A: Amount>(dist: &mut Vec<A>, p: &A, q: &A) -> A {
    let mut next = vec![A::zero(); dist.len() + 1];
    let mut absorbed = A::zero();
    for (l, mass) in dist.iter().enumerate().skip(1) {
        if mass.is_zero() {
            continue;
        }
        next[l + 1] = next[l + 1].clone() + q.clone() * mass.clone();
        let won = p.clone() * mass.clone();
        if l >= 3 {
            next[l - 2] = next[l - 2].clone() + won;
        } else {
            absorbed = absorbed + won;
        }
    }
    while next.len() > 2 && next.last().is_some_and(|m| m.is_zero()) {
        next.pop();
    }
    *dist = next;
    absorbed
}

/// Forward recursion over the law of the list length.
pub fn survival_dp<A: Amount>(l0: usize, p: &A, n_max: usize) -> Result<SurvivalTable<A>, StoppingError> {
    if l0 == 0 {
        return Err(StoppingError::InvalidConfig("l0 must be at least 1".into()));
    }
    if n_max == 0 {
        return Err(StoppingError::InvalidConfig("n_max must be at least 1".into()));
    }
    check_probability(p)?;
    let q = A::one() - p.clone();

    let mut dist = vec![A::zero(); l0 + 1];
    dist[l0] = A::one();

    let mut survival = Vec::with_capacity(n_max + 1);
    let mut absorbed = Vec::with_capacity(n_max + 1);
    let mut alive = Vec::with_capacity(n_max + 1);
    survival.push(A::one());
    absorbed.push(A::zero());
    alive.push(A::one());
    for _ in 1..=n_max {
        // P(N >= n) = P(N > n - 1)
        survival.push(alive.last().expect("non-empty").clone());
        absorbed.push(advance(&mut dist, p, &q));
        alive.push(A::sum_of(dist.iter()));
    }
    Ok(SurvivalTable {
        l0,
        p: p.clone(),
        survival,
        absorbed,
        alive,
    })
}

/// Ratio of `P(N >= n + 1)` to `n^{-3/2} ρ^{n/3}` within one residue class.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    /// `n mod 3`.
    pub residue: usize,
    /// `(n, ratio)` over the window.
    pub ratios: Vec<(usize, f64)>,
    /// Geometric mean of the ratios.
    pub plateau_estimate: f64,
    /// `max |ratio / plateau - 1|`.
    pub relative_spread: f64,
}

/// `n^{-3/2} ρ^{n/3}`, evaluated in log space.
pub fn envelope(n: usize, rho: f64) -> f64 {
    let n = n as f64;
    (-1.5 * n.ln() + n / 3.0 * rho.ln()).exp()
}

pub const DEFAULT_FIT_WINDOW: (usize, usize) = (300, 600);
pub const DEFAULT_SPREAD_THRESHOLD: f64 = 0.05;

/// Fits the envelope separately in each residue class of `n mod 3` over
/// `n ∈ [lo, hi]`, comparing against `P(N >= n + 1)`.
pub fn asymptotic_fit(table: &SurvivalTable<f64>, window: (usize, usize)) -> Result<[AsymptoticFit; 3], StoppingError> {
    let (lo, hi) = window;
    let r = rho(&table.p);
    // below p = 1/3 the walk escapes with positive probability
    if r >= 1.0 || table.p * 3.0 <= 1.0 {
        return Err(StoppingError::RhoAtLeastOne { rho: r });
    }
    if lo == 0 || hi < lo + 2 {
        return Err(StoppingError::InvalidConfig(format!(
            "window [{lo}, {hi}] must start at 1 and hold every residue class"
        )));
    }
    if hi + 1 > table.n_max() {
        return Err(StoppingError::WindowOutOfRange {
            lo,
            hi,
            needed: hi + 1,
            n_max: table.n_max(),
        });
    }
    let ln_rho = r.ln();
    let fits = [0, 1, 2].map(|residue| -> Result<AsymptoticFit, StoppingError> {
        let mut ratios = Vec::new();
        for n in (lo..=hi).filter(|n| n % 3 == residue) {
            let s = table.survival[n + 1];
            if !(s > 0.0) {
                return Err(StoppingError::SurvivalUnderflow { n: n + 1 });
            }
            let nf = n as f64;
            let ln_ratio = s.ln() + 1.5 * nf.ln() - nf / 3.0 * ln_rho;
            ratios.push((n, ln_ratio.exp()));
        }
        let mean_ln = neumaier_sum(ratios.iter().map(|(_, x)| x.ln())) / ratios.len() as f64;
        let plateau = mean_ln.exp();
        let spread = ratios
            .iter()
            .map(|(_, x)| (x / plateau - 1.0).abs())
            .fold(0.0, f64::max);
        Ok(AsymptoticFit {
            residue,
            ratios,
            plateau_estimate: plateau,
            relative_spread: spread,
        })
    });
    let [a, b, c] = fits;
    Ok([a?, b?, c?])
}

/// `E[N]` with a certified bound on the truncated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Upper bound on `E[N] - mean`.
    pub truncation_bound: f64,
    /// Number of survival terms summed.
    pub terms: usize,
}

pub const MEAN_MAX_STEPS: usize = 1_000_000;

/// `E[N] = Σ_{n>=0} P(N > n)`, summed until the remaining tail is certified
/// below `tolerance`.
///
/// For an unabsorbed walk at length `l`, a Chernoff bound with
/// `e^θ = (2p/q)^{1/3}` gives `P(N > n + j) <= (2p/q)^{l/3} ρ^{j/3}`, so the
/// tail after `n` coups is at most `Σ_l P(l_n = l) (2p/q)^{l/3} / (1 - ρ^{1/3})`.
pub fn mean_stopping_time(l0: usize, p: f64, tolerance: f64) -> Result<MeanEstimate, StoppingError> {
    if l0 == 0 {
        return Err(StoppingError::InvalidConfig("l0 must be at least 1".into()));
    }
    if !(tolerance > 0.0) {
        return Err(StoppingError::InvalidConfig("tolerance must be positive".into()));
    }
    check_probability(&p)?;
    if p <= 1.0 / 3.0 {
        return Err(StoppingError::DivergentMean { p });
    }
    let q = 1.0 - p;
    let decay = rho(&p).cbrt();
    let ln_base = if q > 0.0 { (2.0 * p / q).ln() / 3.0 } else { f64::INFINITY };

    let mut dist = vec![0.0; l0 + 1];
    dist[l0] = 1.0;
    let mut terms = Vec::new();
    let mut bound = f64::INFINITY;
    for step in 0..MEAN_MAX_STEPS {
        let alive = neumaier_sum(dist.iter().copied());
        if alive == 0.0 {
            bound = 0.0;
            break;
        }
        terms.push(alive);
        if q > 0.0 {
            let weighted = neumaier_sum(
                dist.iter()
                    .enumerate()
                    .filter(|(_, m)| **m > 0.0)
                    .map(|(l, m)| (m.ln() + l as f64 * ln_base).exp()),
            );
            // the term just pushed is P(N > step), already part of the sum
            bound = weighted / (1.0 - decay) - alive;
            if bound.max(0.0) < tolerance {
                bound = bound.max(0.0);
                break;
            }
        }
        if step + 1 == MEAN_MAX_STEPS {
            return Err(StoppingError::NotConverged {
                steps: MEAN_MAX_STEPS,
                bound,
            });
        }
        advance(&mut dist, &p, &q);
    }
    Ok(MeanEstimate {
        mean: neumaier_sum(terms.iter().copied()),
        truncation_bound: bound,
        terms: terms.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amount::Exact;

    fn ex(n: i64, d: u64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho(&ex(1, 3)), ex(1, 1));
        assert_eq!(rho(&ex(1, 2)), ex(27, 32));
        assert_eq!(rho(&ex(2, 3)), ex(1, 2));
    }

    #[test]
    fn small_cases() {
        let p = ex(1, 3);
        let t = survival_dp(1, &p, 3).unwrap();
        assert_eq!(t.survival[0], ex(1, 1));
        assert_eq!(t.survival[1], ex(1, 1));
        assert_eq!(t.survival[2], ex(2, 3));

        let t = survival_dp(2, &ex(1, 2), 2).unwrap();
        assert_eq!(t.absorbed[1], ex(1, 2));

        let t = survival_dp(1, &ex(1, 2), 3).unwrap();
        assert_eq!(t.survival[3], ex(1, 4));
    }

    #[test]
    fn invalid_inputs() {
        assert!(survival_dp(0, &0.5, 10).is_err());
        assert!(survival_dp(1, &0.5, 0).is_err());
        assert!(survival_dp(1, &1.5, 10).is_err());
    }

    #[test]
    fn exact_mass_is_conserved() {
        let t = survival_dp(3, &ex(3, 5), 25).unwrap();
        assert_eq!(t.conservation_error(), 0.0);
        let t = survival_dp(3, &0.6f64, 600).unwrap();
        assert!(t.conservation_error() < 1e-12);
    }

    #[test]
    fn fit_refuses_non_decaying_envelope() {
        let t = survival_dp(1, &(1.0f64 / 3.0), 50).unwrap();
        assert!(matches!(
            asymptotic_fit(&t, (10, 40)),
            Err(StoppingError::RhoAtLeastOne { .. })
        ));
        let t = survival_dp(1, &0.3f64, 50).unwrap();
        assert!(matches!(
            asymptotic_fit(&t, (10, 40)),
            Err(StoppingError::RhoAtLeastOne { .. })
        ));
    }

    #[test]
    fn fit_recovers_synthetic_constant() {
        let p = 0.5;
        let d = 0.37;
        let r = rho(&p);
        let survival: Vec<f64> = (0..=101)
            .map(|n| if n == 0 { 1.0 } else { d * envelope(n - 1, r) })
            .collect();
        let table = SurvivalTable::from_survival(1, p, survival);
        for fit in asymptotic_fit(&table, (40, 100)).unwrap() {
            assert!((fit.plateau_estimate - d).abs() < 1e-12);
            assert!(fit.relative_spread < 1e-12);
        }
    }

    #[test]
    fn fit_window_must_fit_table() {
        let t = survival_dp(1, &0.5f64, 600).unwrap();
        assert!(matches!(
            asymptotic_fit(&t, (300, 600)),
            Err(StoppingError::WindowOutOfRange { needed: 601, .. })
        ));
        assert!(asymptotic_fit(&t, (300, 599)).is_ok());
    }

    #[test]
    fn deterministic_means() {
        let m = mean_stopping_time(1, 1.0, 1e-12).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.truncation_bound, 0.0);
        let m = mean_stopping_time(5, 1.0, 1e-12).unwrap();
        assert_eq!(m.mean, 3.0);
        assert!(matches!(
            mean_stopping_time(1, 1.0 / 3.0, 1e-6),
            Err(StoppingError::DivergentMean { .. })
        ));
    }

    #[test]
    fn mean_matches_survival_sum() {
        let m = mean_stopping_time(4, 0.6, 1e-10).unwrap();
        assert!(m.truncation_bound < 1e-10);
        let t = survival_dp(4, &0.6f64, 2000).unwrap();
        let direct = neumaier_sum(t.survival[1..].iter().copied());
        assert!((m.mean - direct).abs() < 1e-9, "{} vs {direct}", m.mean);
    }
}
