use serde::Serialize;

use super::{CurvePoint, EstimatorError};

pub const MIN_GRID_POINTS: usize = 8;
/// Required span of the grid, in powers of ten.
pub const MIN_DECADES: f64 = 3.0;
/// Slope-exponent band around zero that counts as logarithmic growth.
const LOG_BAND: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthLabel {
    Saturating,
    Logarithmic,
    SuperLogarithmic,
}

impl std::fmt::Display for GrowthLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GrowthLabel::Saturating => "saturating",
            GrowthLabel::Logarithmic => "logarithmic",
            GrowthLabel::SuperLogarithmic => "super-logarithmic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub label: GrowthLabel,
    /// Rise of the curve across the upper half, relative to its last value.
    /// A constant tail leaves this near zero.
    pub relative_rise: f64,
    /// `V = a + c ln M`.
    pub log_slope: f64,
    pub r2_log: f64,
    /// `ln V = a + k ln M`.
    pub power_exponent: f64,
    pub r2_power: f64,
    /// `β` in `dV/d ln M ∝ M^β`, from the two halves of the upper grid.
    pub slope_exponent: f64,
}

/// Least squares `y = a + c x`; returns `(c, R²)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let c = sxy / sxx;
    let r2 = if syy > 0.0 { (c * sxy / syy).clamp(0.0, 1.0) } else { 1.0 };
    (c, r2)
}

/// Classifies the growth of a truncated-mean curve `V(M)` on the upper half
/// of its grid. The label comes from how the increment per unit of `ln M`
/// scales with `M`: shrinking like a power means a finite limit, flat means
/// `V ~ c ln M`, and growing means faster than logarithmic.
pub fn growth_classifier(curve: &[CurvePoint]) -> Result<GrowthFit, EstimatorError> {
    if curve.len() < MIN_GRID_POINTS {
        return Err(EstimatorError::InsufficientGrid(format!(
            "{} points, need {MIN_GRID_POINTS}",
            curve.len()
        )));
    }
    if curve.iter().any(|c| !(c.abscissa > 0.0)) || curve.windows(2).any(|w| w[1].abscissa <= w[0].abscissa) {
        return Err(EstimatorError::InsufficientGrid("grid must be positive and increasing".into()));
    }
    let decades = (curve[curve.len() - 1].abscissa / curve[0].abscissa).log10();
    if decades < MIN_DECADES - 1e-9 {
        return Err(EstimatorError::InsufficientGrid(format!(
            "grid spans {decades:.2} decades, need {MIN_DECADES}"
        )));
    }
    let upper = &curve[curve.len() / 2..];
    let ln_m: Vec<f64> = upper.iter().map(|c| c.abscissa.ln()).collect();
    let v: Vec<f64> = upper.iter().map(|c| c.value).collect();
    let (first, last) = (v[0], v[v.len() - 1]);
    let relative_rise = if last > 0.0 { (last - first) / last } else { 0.0 };
    let (log_slope, r2_log) = linear_fit(&ln_m, &v);
    let (power_exponent, r2_power) = if v.iter().all(|&x| x > 0.0) {
        linear_fit(&ln_m, &v.iter().map(|x| x.ln()).collect::<Vec<_>>())
    } else {
        (f64::NAN, f64::NAN)
    };

    let (lo, mid, hi) = (0, ln_m.len() / 2, ln_m.len() - 1);
    let slope = |i: usize, j: usize| (v[j] - v[i]) / (ln_m[j] - ln_m[i]);
    let (s1, s2) = (slope(lo, mid), slope(mid, hi));
    let centre_gap = 0.5 * (ln_m[hi] - ln_m[lo]);
    let slope_exponent = if s2 <= 0.0 {
        f64::NEG_INFINITY
    } else if s1 <= 0.0 {
        f64::INFINITY
    } else {
        (s2 / s1).ln() / centre_gap
    };
    let label = if slope_exponent < -LOG_BAND {
        GrowthLabel::Saturating
    } else if slope_exponent > LOG_BAND {
        GrowthLabel::SuperLogarithmic
    } else {
        GrowthLabel::Logarithmic
    };
    Ok(GrowthFit {
        label,
        relative_rise,
        log_slope,
        r2_log,
        power_exponent,
        r2_power,
        slope_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{log_grid, truncated_mean_curve, Samples};

    /// Deterministic quantiles of a Pareto law with `P(X ≥ x) = x^{-α}`, `x ≥ 1`.
    fn pareto(alpha: f64, n: usize) -> Samples {
        Samples::new((0..n).map(|i| ((i as f64 + 0.5) / n as f64).powf(-1.0 / alpha)).collect())
    }

    fn classify(samples: &Samples) -> GrowthFit {
        let grid = log_grid(1.0, 1e4, 20).unwrap();
        growth_classifier(&truncated_mean_curve(samples, &grid).unwrap()).unwrap()
    }

    #[test]
    fn bounded_samples_saturate() {
        let fit = classify(&Samples::new((0..1000).map(|i| 1.0 + (i % 50) as f64).collect()));
        assert_eq!(fit.label, GrowthLabel::Saturating);
        assert_eq!(fit.relative_rise, 0.0);
    }

    #[test]
    fn pareto_tails() {
        let n = 1_000_000;
        let fit = classify(&pareto(1.0, n));
        assert_eq!(fit.label, GrowthLabel::Logarithmic, "{fit:?}");
        assert!(fit.r2_log > 0.99);
        assert_eq!(classify(&pareto(0.5, n)).label, GrowthLabel::SuperLogarithmic);
        assert_eq!(classify(&pareto(2.0, n)).label, GrowthLabel::Saturating);
    }

    #[test]
    fn rejects_small_grids() {
        let pt = |m: f64| CurvePoint { abscissa: m, value: 1.0, se: 0.0, n_effective: 1.0, censored_fraction: 0.0 };
        let short: Vec<_> = log_grid(1.0, 1e4, 7).unwrap().into_iter().map(pt).collect();
        assert!(matches!(growth_classifier(&short), Err(EstimatorError::InsufficientGrid(_))));
        let narrow: Vec<_> = log_grid(1.0, 999.0, 10).unwrap().into_iter().map(pt).collect();
        assert!(matches!(growth_classifier(&narrow), Err(EstimatorError::InsufficientGrid(_))));
    }
}
