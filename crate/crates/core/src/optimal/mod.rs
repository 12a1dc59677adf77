//! Value iteration for the optimal constrained list system.
//!
//! `a_l` is the smallest achievable `E[B*]` per unit of initial target for a
//! list system of initial length `l` whose bets never exceed `cap(l) · T` at
//! length `l`, in a fair game. Conditioning on the first coup gives
//!
//! ```text
//! a_1 = ½ (1 + max{1, 2 a_2})
//! a_2 = ½ (1 + max{1, 2 a_3})
//! a_l = min_{b ∈ [0, cap(l)]} ½ (max{b, (1-b) a_{l-2}} + max{b, (1+b) a_{l+1}}),  l ≥ 3
//! ```
//!
//! The first two lines come from the forced full bets at lengths one and two.
//! Every right-hand side is non-decreasing in every `a_j`, so iterating the
//! operator from zero climbs monotonically to its least fixed point. The
//! system is truncated at `L_max` with `a_{L_max+1}` pinned to a boundary
//! value; with boundary zero the result is a lower bound at that depth.

use thiserror::Error;

use crate::betting::ProportionBound;

mod precise;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimalError {
    #[error("min-max preconditions violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no convergence at L_max = {l_max} after {iterations} iterations (last change {sup_change:e})")]
    NotConverged {
        l_max: usize,
        iterations: usize,
        sup_change: f64,
        /// The last iterate.
        partial: Box<ValueSequence>,
    },
}

/// `min_{x ∈ [0,1]} max{r1 x + s1, r2 x + s2}` for a rising and a falling
/// line that cross inside the unit interval: `(r1 s2 − r2 s1) / (r1 − r2)`.
///
/// Requires `r1 > 0 >= r2`, `s1 <= s2` and `r1 + s1 >= r2 + s2`.
pub fn minmax_affine(r1: f64, s1: f64, r2: f64, s2: f64) -> Result<f64, OptimalError> {
    let mut broken = Vec::new();
    if !(r1 > 0.0) {
        broken.push("r1 > 0");
    }
    if !(r2 <= 0.0) {
        broken.push("r2 <= 0");
    }
    if !(s1 <= s2) {
        broken.push("s1 <= s2");
    }
    if !(r1 + s1 >= r2 + s2) {
        broken.push("r1 + s1 >= r2 + s2");
    }
    if !broken.is_empty() {
        return Err(OptimalError::PreconditionViolated(broken.join(", ")));
    }
    Ok((r1 * s2 - r2 * s1) / (r1 - r2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerMin {
    /// Minimising bet proportion.
    pub b: f64,
    pub value: f64,
}

/// Minimises `½ (max{b, (1-b) a_lm2} + max{b, (1+b) a_lp1})` over
/// `b ∈ [0, cap]`.
pub fn inner_min(a_lm2: f64, a_lp1: f64, cap: f64) -> InnerMin {
    inner_min_scaled(a_lm2, a_lp1, cap, 1.0)
}

/// [`inner_min`] with the bet measured in units of `unit`, i.e. the
/// objective `½ (max{u b, (1-b) A} + max{u b, (1+b) C})`.
///
/// The objective is a sum of two convex piecewise-linear functions of `b`,
/// so its minimum over an interval sits at an endpoint or at one of the two
/// kinks `u b = (1-b) A` and `u b = (1+b) C`.
pub(crate) fn inner_min_scaled(a_lm2: f64, a_lp1: f64, cap: f64, unit: f64) -> InnerMin {
    let cap = cap.clamp(0.0, 1.0);
    let objective =
        |b: f64| 0.5 * ((unit * b).max((1.0 - b) * a_lm2) + (unit * b).max((1.0 + b) * a_lp1));

    let mut candidates = [0.0, cap, f64::NAN, f64::NAN];
    if unit + a_lm2 > 0.0 {
        candidates[2] = a_lm2 / (unit + a_lm2);
    }
    if a_lp1 < unit {
        candidates[3] = a_lp1 / (unit - a_lp1);
    }
    let mut best = InnerMin {
        b: 0.0,
        value: objective(0.0),
    };
    for b in candidates.into_iter().filter(|b| b.is_finite()) {
        let b = b.clamp(0.0, cap);
        let value = objective(b);
        if value < best.value || (value == best.value && b < best.b) {
            best = InnerMin { b, value };
        }
    }
    best
}

/// The truncated system: caps, depth and boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueProblem {
    pub caps: ProportionBound,
    pub l_max: usize,
    /// Value assigned to `a_{L_max + 1}`.
    pub boundary: f64,
    /// Size of the forced full bets at lengths one and two; the fixed point
    /// scales linearly with it.
    pub unit: f64,
}

impl ValueProblem {
    pub fn new(caps: ProportionBound, l_max: usize) -> Self {
        Self {
            caps,
            l_max,
            boundary: 0.0,
            unit: 1.0,
        }
    }

    pub fn with_boundary(mut self, boundary: f64) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_unit(mut self, unit: f64) -> Self {
        self.unit = unit;
        self
    }

    fn validate(&self) -> Result<(), OptimalError> {
        if self.l_max == 0 {
            return Err(OptimalError::InvalidConfig("L_max must be at least 1".into()));
        }
        if !(self.boundary >= 0.0) || !self.boundary.is_finite() {
            return Err(OptimalError::InvalidConfig("boundary must be finite and >= 0".into()));
        }
        if !(self.unit > 0.0) || !self.unit.is_finite() {
            return Err(OptimalError::InvalidConfig("unit must be positive".into()));
        }
        if let ProportionBound::Constant(c) = self.caps {
            if !(0.0..=1.0).contains(&c) {
                return Err(OptimalError::InvalidConfig(format!("cap {c} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Truncated sequence `a_1..a_{L_max}` and the state of the iteration that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSequence {
    pub problem: ValueProblem,
    values: Vec<f64>,
    /// `a_l - a_{l+1}` for `l = 1..=L_max`, kept separately because the
    /// values can be far too large for their differences to survive in `f64`.
    steps: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm change of the last iteration, each entry measured relative
    /// to `max(1, a_l)`.
    pub sup_change: f64,
    pub converged: bool,
}

impl ValueSequence {
    pub fn zeros(problem: ValueProblem) -> Self {
        Self::from_values(problem, vec![0.0; problem.l_max]).expect("length matches")
    }

    pub fn from_values(problem: ValueProblem, values: Vec<f64>) -> Result<Self, OptimalError> {
        if values.len() != problem.l_max {
            return Err(OptimalError::InvalidConfig(format!(
                "expected {} values, got {}",
                problem.l_max,
                values.len()
            )));
        }
        let steps = values
            .iter()
            .zip(values.iter().skip(1).chain([&problem.boundary]))
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            values,
            steps,
            problem,
            iterations: 0,
            sup_change: f64::INFINITY,
            converged: false,
        })
    }

    pub fn l_max(&self) -> usize {
        self.problem.l_max
    }

    /// `a_l` for `1 <= l <= L_max + 1`; the last one is the boundary.
    pub fn a(&self, l: usize) -> f64 {
        assert!(l >= 1 && l <= self.l_max() + 1, "index {l} outside 1..=L_max+1");
        if l == self.l_max() + 1 {
            self.problem.boundary
        } else {
            self.values[l - 1]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `a_l - a_{l+1}` for `1 <= l <= L_max`.
    pub fn step(&self, l: usize) -> f64 {
        self.steps[l - 1]
    }

    /// `a_{l-2} - a_l` for `l = 3..=L_max`.
    pub fn gaps(&self) -> Vec<(usize, f64)> {
        (3..=self.l_max()).map(|l| (l, self.gap(l))).collect()
    }

    fn gap(&self, l: usize) -> f64 {
        self.step(l - 2) + self.step(l - 1)
    }

    /// `(a_l - a_{l+2}) / (a_{l-2} - a_l)` for `l = 3..L_max`.
    pub fn gap_ratios(&self) -> Vec<(usize, f64)> {
        (3..self.l_max()).map(|l| (l, self.gap(l + 2) / self.gap(l))).collect()
    }

    /// `a_1 - a_2 - u/2` and `a_2 - a_3 - u/2`; both are non-negative at any
    /// fixed point. `None` when `L_max < 2`.
    pub fn boundary_margins(&self) -> Option<(f64, f64)> {
        let half = 0.5 * self.problem.unit;
        (self.l_max() >= 2).then(|| (self.step(1) - half, self.step(2) - half))
    }

    /// First `l < L_max` with `a_l <= a_{l+1}`, if any.
    pub fn first_non_decrease(&self) -> Option<usize> {
        (1..self.l_max()).find(|&l| !(self.step(l) > 0.0))
    }
}

/// One synchronous sweep of the recursion.
pub fn bellman_operator(v: &ValueSequence) -> ValueSequence {
    let problem = v.problem;
    let u = problem.unit;
    let values: Vec<f64> = (1..=problem.l_max)
        .map(|l| match l {
            1 | 2 => 0.5 * (u + u.max(2.0 * v.a(l + 1))),
            _ => inner_min_scaled(v.a(l - 2), v.a(l + 1), problem.caps.at(l), u).value,
        })
        .collect();
    let sup_change = scaled_change(&values, &v.values);
    let mut next = ValueSequence::from_values(problem, values).expect("length matches");
    next.iterations = v.iterations + 1;
    next.sup_change = sup_change;
    next
}

/// `max_l |x_l - y_l| / max(1, |y_l|)`.
fn scaled_change(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Iterates [`bellman_operator`] from zero until a sweep changes no entry by
/// `tol` or more. Every iterate is a lower bound on the least fixed point.
///
/// Runs of losses push the optimal system back towards short lists, where it
/// collects its forced full bets, many times before it drifts out at
/// `L_max`; the number of sweeps needed grows accordingly and is already in
/// the millions at `L_max = 100`. [`solve_fixed_point`] is the practical
/// solver.
pub fn value_iteration(problem: ValueProblem, tol: f64, max_iter: usize) -> Result<ValueSequence, OptimalError> {
    problem.validate()?;
    check_tol(tol)?;
    let mut v = ValueSequence::zeros(problem);
    while v.iterations < max_iter {
        v = bellman_operator(&v);
        if v.sup_change < tol {
            v.converged = true;
            return Ok(v);
        }
    }
    Err(OptimalError::NotConverged {
        l_max: problem.l_max,
        iterations: v.iterations,
        sup_change: v.sup_change,
        partial: Box::new(v),
    })
}

fn check_tol(tol: f64) -> Result<(), OptimalError> {
    if !(tol > 0.0) {
        return Err(OptimalError::InvalidConfig("tolerance must be positive".into()));
    }
    Ok(())
}

/// Policy iteration: read the minimising bet proportions and the active
/// branch of every `max` off the current sequence, solve the resulting
/// linear system, repeat until the sequence stops moving.
///
/// The truncated system has a single fixed point, so this reaches the vector
/// that [`value_iteration`] approaches, in a few dozen solves. The work is
/// done in binary floating point with `128 + L_max + log2(1/tol)` bits: the values grow
/// exponentially in `L_max` while the gaps that decide the optimal bets stay
/// small, and the linear solves never subtract. `iterations` counts solves;
/// convergence is declared when a solve and one further sweep each change no
/// entry by `tol` relative to `max(1, a_l)`.
pub fn solve_fixed_point(problem: ValueProblem, tol: f64, max_iter: usize) -> Result<ValueSequence, OptimalError> {
    problem.validate()?;
    check_tol(tol)?;
    precise::policy_iteration(problem, tol, max_iter)
}

/// `r + r²` with `r = (1-ε)/(1+ε)`: the growth factor of consecutive gaps
/// forced once every cap is at most `ε`.
pub fn gap_growth_factor(eps: f64) -> f64 {
    let r = (1.0 - eps) / (1.0 + eps);
    r + r * r
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub l_max: usize,
    pub a1: f64,
    pub sequence: ValueSequence,
}

/// Solves the truncated system at each depth in `l_max_list`.
pub fn divergence_scan(
    caps: ProportionBound,
    l_max_list: &[usize],
    boundary: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<ScanRow>, OptimalError> {
    if l_max_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OptimalError::InvalidConfig("L_max list must be strictly increasing".into()));
    }
    l_max_list
        .iter()
        .map(|&l_max| {
            let problem = ValueProblem::new(caps, l_max).with_boundary(boundary);
            let sequence = solve_fixed_point(problem, tol, max_iter)?;
            Ok(ScanRow {
                l_max,
                a1: sequence.a(1),
                sequence,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax_affine(1.0, 0.0, -1.0, 1.0).unwrap(), 0.5);
        assert_eq!(minmax_affine(2.0, 0.0, 0.0, 1.0).unwrap(), 1.0);
        assert!((minmax_affine(1.0, 1.0, -2.0, 2.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn minmax_rejects_bad_inputs() {
        let err = minmax_affine(-1.0, 0.0, -1.0, 1.0).unwrap_err();
        assert!(matches!(err, OptimalError::PreconditionViolated(ref m) if m.contains("r1 > 0")));
        assert!(minmax_affine(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(minmax_affine(1.0, 2.0, -1.0, 1.0).is_err());
        assert!(minmax_affine(1.0, 0.0, -1.0, 5.0).is_err());
    }

    #[test]
    fn inner_min_examples() {
        let r = inner_min(3.0, 2.0, 0.0);
        assert_eq!((r.b, r.value), (0.0, 2.5));
        assert_eq!(inner_min(1.0, 0.0, 1.0).value, 0.5);
        let r = inner_min(1.0, 1.0, 1.0);
        assert_eq!((r.b, r.value), (0.0, 1.0));
    }

    #[test]
    fn two_level_fixed_point() {
        let problem = ValueProblem::new(ProportionBound::SqrtCap, 2);
        let v1 = bellman_operator(&ValueSequence::zeros(problem));
        assert_eq!(v1.values(), &[1.0, 1.0]);
        let v2 = bellman_operator(&v1);
        assert_eq!(v2.values(), &[1.5, 1.0]);
        let v = solve_fixed_point(problem, 1e-12, 100).unwrap();
        assert_eq!(v.values(), &[1.5, 1.0]);
        assert!(v.converged);
    }

    #[test]
    fn zero_input_gives_half_unit_floor() {
        for caps in [ProportionBound::SqrtCap, ProportionBound::Constant(0.0)] {
            let v = bellman_operator(&ValueSequence::zeros(ValueProblem::new(caps, 10)));
            assert!(v.a(1) >= 0.5);
        }
    }

    #[test]
    fn not_converged_keeps_lower_bound() {
        let problem = ValueProblem::new(ProportionBound::SqrtCap, 50);
        match solve_fixed_point(problem, 1e-12, 3) {
            Err(OptimalError::NotConverged { partial, iterations, .. }) => {
                assert_eq!(iterations, 3);
                assert!(partial.a(1) > 0.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn scan_requires_increasing_depths() {
        assert!(divergence_scan(ProportionBound::SqrtCap, &[10, 10], 0.0, 1e-9, 1000).is_err());
    }

    #[test]
    fn gap_growth_factor_values() {
        assert_eq!(gap_growth_factor(0.0), 2.0);
        assert!(gap_growth_factor(0.1) > 1.0);
        assert!(gap_growth_factor(0.5) < 1.0);
    }
}
