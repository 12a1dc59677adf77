use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BettingError, SystemState};
use crate::amount::{Amount, Exact};

/// `min{√(2/l) + 2/l, 1}`, the largest bet-to-target proportion a
/// Labouchère system can reach from a good list of length `l`.
pub fn proportion_cap(l: usize) -> Result<f64, BettingError> {
    if l == 0 {
        return Err(BettingError::InvalidLength);
    }
    let inv = 2.0 / l as f64;
    Ok((inv.sqrt() + inv).min(1.0))
}

/// A bet-to-target proportion as a function of list length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ProportionBound {
    Constant(f64),
    /// [`proportion_cap`].
    SqrtCap,
}

impl ProportionBound {
    pub fn at(&self, l: usize) -> f64 {
        match *self {
            ProportionBound::Constant(c) => c,
            ProportionBound::SqrtCap => proportion_cap(l.max(1)).expect("l >= 1"),
        }
    }

    /// Compares `numer / denom` against the bound at length `l` without
    /// rounding. `denom` must be positive.
    fn cmp_ratio_exact(&self, numer: &Exact, denom: &Exact, l: usize) -> Ordering {
        let ratio = numer / denom;
        match *self {
            ProportionBound::Constant(c) => {
                ratio.cmp(&decimal_exact(c))
            }
            ProportionBound::SqrtCap => {
                let one = Exact::from_ratio(1, 1);
                if cmp_with_sqrt_form(&one, l.max(1)) != Ordering::Greater {
                    // √(2/l) + 2/l ≥ 1, so the cap is 1
                    ratio.cmp(&one)
                } else {
                    cmp_with_sqrt_form(&ratio, l.max(1))
                }
            }
        }
    }
}

impl fmt::Display for ProportionBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProportionBound::Constant(c) => write!(f, "const:{c}"),
            ProportionBound::SqrtCap => f.write_str("sqrt"),
        }
    }
}

/// The rational with the same shortest decimal representation as `v`, so
/// that a configured `0.1` means one tenth rather than its binary neighbour.
fn decimal_exact(v: f64) -> Exact {
    Exact::parse_amount(&v.to_string())
        .ok()
        .or_else(|| Exact::from_f64(v))
        .expect("finite constant")
}

/// Exact comparison of `x` against `√(2/l) + 2/l`.
fn cmp_with_sqrt_form(x: &Exact, l: usize) -> Ordering {
    let two_over_l = Exact::from_ratio(2, l as u64);
    let d = x - &two_over_l;
    if d < Exact::from_ratio(0, 1) {
        return Ordering::Less;
    }
    (&d * &d).cmp(&two_over_l)
}

/// `bet >= c1 * length + c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFloor {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetConstraints {
    pub lower: ProportionBound,
    pub upper: ProportionBound,
    pub linear_floor: Option<LinearFloor>,
}

impl Default for BetConstraints {
    fn default() -> Self {
        Self::unconstrained()
    }
}

impl BetConstraints {
    pub fn unconstrained() -> Self {
        Self {
            lower: ProportionBound::Constant(0.0),
            upper: ProportionBound::Constant(1.0),
            linear_floor: None,
        }
    }

    pub fn sqrt_cap() -> Self {
        Self {
            upper: ProportionBound::SqrtCap,
            ..Self::unconstrained()
        }
    }

    pub fn constant_floor(c: f64) -> Self {
        Self {
            lower: ProportionBound::Constant(c),
            ..Self::unconstrained()
        }
    }

    pub fn with_linear_floor(mut self, c1: f64, c2: f64) -> Self {
        self.linear_floor = Some(LinearFloor { c1, c2 });
        self
    }

    pub fn is_unconstrained(&self) -> bool {
        *self == Self::unconstrained()
    }

    /// Checks that the proportions are valid and `lower <= upper` for
    /// every length up to `max_len`.
    pub fn check(&self, max_len: usize) -> Result<(), BettingError> {
        for bound in [self.lower, self.upper] {
            if let ProportionBound::Constant(c) = bound {
                if !(0.0..=1.0).contains(&c) {
                    return Err(BettingError::InvalidConfig(format!(
                        "proportion {c} outside [0, 1]"
                    )));
                }
            }
        }
        if let Some(f) = self.linear_floor {
            if !(f.c1 > 0.0) || !f.c2.is_finite() {
                return Err(BettingError::InvalidConfig(
                    "linear floor needs c1 > 0 and finite c2".into(),
                ));
            }
        }
        if let Some(l) = (1..=max_len.max(1)).find(|&l| self.lower.at(l) > self.upper.at(l)) {
            return Err(BettingError::InvalidConfig(format!(
                "lower proportion exceeds upper proportion at length {l}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BetViolation {
    #[error("bet {bet} below {proportion} x target {target} at length {length}")]
    BelowLowerProportion {
        bet: f64,
        target: f64,
        proportion: f64,
        length: usize,
    },
    #[error("bet {bet} above {proportion} x target {target} at length {length}")]
    AboveUpperProportion {
        bet: f64,
        target: f64,
        proportion: f64,
        length: usize,
    },
    #[error("bet {bet} below linear floor {floor} at length {length}")]
    BelowLinearFloor { bet: f64, floor: f64, length: usize },
    #[error("state already terminated")]
    Terminated,
}

/// Checks `target * lower(l) <= bet <= target * upper(l)` and the optional
/// linear floor. Exact amounts are compared without rounding, including
/// against the irrational square-root cap.
pub fn validate_bet<A: Amount>(
    state: &SystemState<A>,
    bet: &A,
    constraints: &BetConstraints,
) -> Result<(), BetViolation> {
    if state.is_terminated() {
        return Err(BetViolation::Terminated);
    }
    let l = state.length();
    let target = state.target();
    let (bet_f, target_f) = (bet.to_f64(), target.to_f64());

    let cmp = |bound: &ProportionBound| -> Ordering {
        match (bet.as_exact(), target.as_exact()) {
            (Some(b), Some(t)) if t > Exact::from_ratio(0, 1) => bound.cmp_ratio_exact(&b, &t, l),
            (Some(b), Some(_)) => b.cmp(&Exact::from_ratio(0, 1)),
            _ => bet_f
                .partial_cmp(&(target_f * bound.at(l)))
                .unwrap_or(Ordering::Greater),
        }
    };

    if cmp(&constraints.lower) == Ordering::Less {
        return Err(BetViolation::BelowLowerProportion {
            bet: bet_f,
            target: target_f,
            proportion: constraints.lower.at(l),
            length: l,
        });
    }
    if cmp(&constraints.upper) == Ordering::Greater {
        return Err(BetViolation::AboveUpperProportion {
            bet: bet_f,
            target: target_f,
            proportion: constraints.upper.at(l),
            length: l,
        });
    }
    if let Some(LinearFloor { c1, c2 }) = constraints.linear_floor {
        let floor_f = c1 * l as f64 + c2;
        let below = match bet.as_exact() {
            Some(b) => {
                let floor = decimal_exact(c1) * Exact::from_ratio(l as i64, 1) + decimal_exact(c2);
                b < floor
            }
            None => bet_f < floor_f,
        };
        if below {
            return Err(BetViolation::BelowLinearFloor {
                bet: bet_f,
                floor: floor_f,
                length: l,
            });
        }
    }
    Ok(())
}
