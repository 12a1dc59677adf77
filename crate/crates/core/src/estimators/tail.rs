use serde::Serialize;

use super::EstimatorError;
use crate::amount::neumaier_sum;
use crate::betting::EpisodeRecord;

/// One statistic per episode, with the censoring flag of its record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    pub values: Vec<f64>,
    pub censored: Vec<bool>,
}

impl Samples {
    pub fn new(values: Vec<f64>) -> Self {
        let censored = vec![false; values.len()];
        Self { values, censored }
    }

    pub fn from_records<F: Fn(&EpisodeRecord<f64>) -> f64>(records: &[EpisodeRecord<f64>], f: F) -> Self {
        Self {
            values: records.iter().map(f).collect(),
            censored: records.iter().map(|r| r.censored).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.censored.iter().filter(|&&c| c).count() as f64 / self.len() as f64
    }

    fn non_empty(&self) -> Result<&Self, EstimatorError> {
        if self.is_empty() {
            Err(EstimatorError::EmptySamples)
        } else {
            Ok(self)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// `M` for truncated means, `λ` for survival curves.
    pub abscissa: f64,
    pub value: f64,
    pub se: f64,
    pub n_effective: f64,
    pub censored_fraction: f64,
}

/// Mean and its standard error (sample standard deviation over `√n`).
pub fn mean_with_se(values: &[f64]) -> Result<(f64, f64), EstimatorError> {
    if values.is_empty() {
        return Err(EstimatorError::EmptySamples);
    }
    let n = values.len() as f64;
    let mean = neumaier_sum(values.iter().copied()) / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss = neumaier_sum(values.iter().map(|x| (x - mean) * (x - mean)));
    Ok((mean, (ss / (n - 1.0) / n).sqrt()))
}

/// `P̂(X ≥ λ)` with binomial standard errors. Censored values count at their
/// observed size, so the curve is a lower bound where censoring is present.
pub fn empirical_survival(samples: &Samples, grid: &[f64]) -> Result<Vec<CurvePoint>, EstimatorError> {
    let s = samples.non_empty()?;
    let n = s.len() as f64;
    Ok(grid
        .iter()
        .map(|&lambda| {
            let hits = s.values.iter().filter(|&&x| x >= lambda).count() as f64;
            let p = hits / n;
            CurvePoint {
                abscissa: lambda,
                value: p,
                se: (p * (1.0 - p) / n).sqrt(),
                n_effective: n,
                censored_fraction: s.censored_fraction(),
            }
        })
        .collect())
}

fn transformed_mean<F: Fn(f64) -> f64>(s: &Samples, m: f64, phi: F) -> Result<CurvePoint, EstimatorError> {
    if !(m >= 0.0) {
        return Err(EstimatorError::InvalidConfig(format!("truncation level {m} must be >= 0")));
    }
    let clipped: Vec<f64> = s.values.iter().map(|&x| phi(x.min(m))).collect();
    let (value, se) = mean_with_se(&clipped)?;
    Ok(CurvePoint {
        abscissa: m,
        value,
        se,
        n_effective: s.len() as f64,
        censored_fraction: s.censored_fraction(),
    })
}

/// Mean of `min(x, M)`.
pub fn truncated_mean(samples: &Samples, m: f64) -> Result<CurvePoint, EstimatorError> {
    transformed_mean(samples.non_empty()?, m, |x| x)
}

pub fn truncated_mean_curve(samples: &Samples, grid: &[f64]) -> Result<Vec<CurvePoint>, EstimatorError> {
    grid.iter().map(|&m| truncated_mean(samples, m)).collect()
}

/// `x (ln x)^{-(1+ε)}` for `x ≥ 2`, continued linearly below 2.
pub fn phi_log_damped(x: f64, eps: f64) -> f64 {
    let damp = |y: f64| y.ln().powf(-(1.0 + eps));
    if x >= 2.0 {
        x * damp(x)
    } else {
        x * damp(2.0)
    }
}

/// `x ln x`, clamped at zero below 1.
pub fn phi_x_log_x(x: f64) -> f64 {
    if x > 1.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `(V_{k+1} / V_k)^{1 / log2(M_{k+1} / M_k)} - 1` for consecutive points.
pub fn growth_per_doubling(curve: &[CurvePoint]) -> Vec<f64> {
    curve
        .windows(2)
        .map(|w| {
            let doublings = (w[1].abscissa / w[0].abscissa).log2();
            if w[0].value <= 0.0 {
                return if w[1].value > 0.0 { f64::INFINITY } else { 0.0 };
            }
            (w[1].value / w[0].value).powf(1.0 / doublings) - 1.0
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCurves {
    pub eps: f64,
    /// Means of `φ₁(min(x, M))`.
    pub phi1: Vec<CurvePoint>,
    /// Means of `φ₂(min(x, M))`.
    pub phi2: Vec<CurvePoint>,
    pub phi1_growth: Vec<f64>,
    pub phi2_growth: Vec<f64>,
}

pub fn moment_transform_curves(samples: &Samples, eps: f64, grid: &[f64]) -> Result<MomentCurves, EstimatorError> {
    let s = samples.non_empty()?;
    if !(eps > 0.0) {
        return Err(EstimatorError::InvalidConfig(format!("epsilon {eps} must be > 0")));
    }
    let phi1 = grid
        .iter()
        .map(|&m| transformed_mean(s, m, |x| phi_log_damped(x, eps)))
        .collect::<Result<Vec<_>, _>>()?;
    let phi2 = grid
        .iter()
        .map(|&m| transformed_mean(s, m, phi_x_log_x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MomentCurves {
        eps,
        phi1_growth: growth_per_doubling(&phi1),
        phi2_growth: growth_per_doubling(&phi2),
        phi1,
        phi2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoobPoint {
    pub lambda: f64,
    pub p_hat: f64,
    pub se: f64,
    pub bound: f64,
    /// `bound + 3 se - p_hat`; negative means the point fails.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoobVerdict {
    /// Why the check was not run.
    pub skipped: Option<String>,
    pub points: Vec<DoobPoint>,
    pub worst_margin: f64,
    pub passed: bool,
}

/// Compares `P̂(T* ≥ λ)` with `T0 / λ` on `grid`. Only meaningful for a fair
/// coin; any other `p` yields a skipped verdict.
pub fn doob_check(t_star: &Samples, t0: f64, grid: &[f64], p: f64) -> Result<DoobVerdict, EstimatorError> {
    if (p - 0.5).abs() > 1e-12 {
        return Ok(DoobVerdict {
            skipped: Some(format!("records drawn at p = {p}; the bound needs p = 1/2")),
            points: Vec::new(),
            worst_margin: f64::NAN,
            passed: false,
        });
    }
    let points: Vec<DoobPoint> = empirical_survival(t_star, grid)?
        .into_iter()
        .map(|c| {
            let bound = t0 / c.abscissa;
            DoobPoint {
                lambda: c.abscissa,
                p_hat: c.value,
                se: c.se,
                bound,
                margin: bound + 3.0 * c.se - c.value,
            }
        })
        .collect();
    let worst_margin = points.iter().map(|d| d.margin).fold(f64::INFINITY, f64::min);
    Ok(DoobVerdict {
        skipped: None,
        passed: worst_margin >= 0.0,
        points,
        worst_margin,
    })
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, EstimatorError> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || points < 2 {
        return Err(EstimatorError::InvalidConfig(format!(
            "log grid needs 0 < lo < hi and at least 2 points (got {lo}, {hi}, {points})"
        )));
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|k| lo * (step * k as f64).exp()).collect();
    grid[points - 1] = hi;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Samples {
        Samples::new(v.to_vec())
    }

    #[test]
    fn survival_counts() {
        let c = empirical_survival(&s(&[1.0, 2.0, 3.0]), &[0.0, 2.0, 3.5]).unwrap();
        assert_eq!(c[0].value, 1.0);
        assert!((c[1].value - 2.0 / 3.0).abs() < 1e-15);
        assert!((c[1].se - (2.0f64 / 27.0).sqrt()).abs() < 1e-15);
        assert_eq!(c[2].value, 0.0);
        assert!(matches!(empirical_survival(&s(&[]), &[1.0]), Err(EstimatorError::EmptySamples)));
    }

    #[test]
    fn truncated_means() {
        let x = s(&[1.0, 2.0, 3.0]);
        assert!((truncated_mean(&x, 2.0).unwrap().value - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(truncated_mean(&x, 0.0).unwrap().value, 0.0);
        assert_eq!(truncated_mean(&x, 10.0).unwrap().value, 2.0);
        assert!(truncated_mean(&x, -1.0).is_err());
        assert!(truncated_mean(&s(&[]), 1.0).is_err());
    }

    #[test]
    fn censoring_is_reported() {
        let x = Samples {
            values: vec![1.0, 5.0, 7.0, 2.0],
            censored: vec![false, true, false, false],
        };
        assert_eq!(truncated_mean(&x, 3.0).unwrap().censored_fraction, 0.25);
    }

    #[test]
    fn phi1_is_constant_past_a_constant_sample() {
        let c = 10.0;
        let curves = moment_transform_curves(&s(&[c; 5]), 0.5, &[10.0, 20.0, 40.0]).unwrap();
        let want = c * c.ln().powf(-1.5);
        for p in &curves.phi1 {
            assert!((p.value - want).abs() < 1e-12);
        }
        assert!(curves.phi1_growth.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn growth_per_doubling_of_a_power() {
        // V = M: doubling M doubles V
        let curve: Vec<CurvePoint> = [1.0, 4.0, 8.0]
            .iter()
            .map(|&m| CurvePoint { abscissa: m, value: m, se: 0.0, n_effective: 1.0, censored_fraction: 0.0 })
            .collect();
        for g in growth_per_doubling(&curve) {
            assert!((g - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doob_guard_and_trivial_point() {
        let x = s(&[1.0, 1.0, 4.0]);
        assert!(doob_check(&x, 1.0, &[1.0], 0.6).unwrap().skipped.is_some());
        let v = doob_check(&x, 1.0, &[1.0], 0.5).unwrap();
        assert!(v.passed);
        assert_eq!(v.points[0].bound, 1.0);
        // two thirds of the mass at or above 2 breaks a bound of one half
        let v = doob_check(&s(&[2.0, 2.0, 1.0]), 1.0, &[1.0, 2.0], 0.5).unwrap();
        assert!(v.worst_margin < 0.5 - 2.0 / 3.0 + 3.0 * (2.0f64 / 27.0).sqrt() + 1e-12);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1.0, 1000.0, 4).unwrap();
        assert_eq!(g[0], 1.0);
        assert_eq!(g[3], 1000.0);
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert!(log_grid(1.0, 2.0, 1).is_err());
    }
}
