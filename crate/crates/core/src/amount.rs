//! Numeric representation of bet amounts and probabilities.
//!
//! Every engine in the crate is generic over [`Amount`], which is implemented
//! for `f64` (fast Monte Carlo batches) and [`Exact`] (arbitrary precision
//! rationals, closed under every update rule used here).

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arbitrary precision rational used in exact mode.
pub type Exact = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse amount {input:?}: {reason}")]
pub struct ParseAmountError {
    pub input: String,
    pub reason: &'static str,
}

pub trait Amount:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + 'static
{
    /// `num / den`, exact when the representation allows it.
    fn from_ratio(num: i64, den: u64) -> Self;

    fn from_usize(v: usize) -> Self {
        Self::from_ratio(v as i64, 1)
    }

    /// Converts a float. Exact mode keeps the full binary expansion.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// The value as an exact rational, if the representation is exact.
    fn as_exact(&self) -> Option<Exact>;

    /// Nearest representable value.
    fn from_exact(v: &Exact) -> Self;

    fn parse_amount(s: &str) -> Result<Self, ParseAmountError>;

    /// Sum of many non-negative terms. Floats use Neumaier compensation.
    fn sum_of<'a, I>(terms: I) -> Self
    where
        I: IntoIterator<Item = &'a Self>,
    {
        terms
            .into_iter()
            .fold(Self::zero(), |acc, t| acc + t.clone())
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }
}

impl Amount for f64 {
    fn from_ratio(num: i64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn from_exact(v: &Exact) -> Self {
        num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn as_exact(&self) -> Option<Exact> {
        None
    }

    fn parse_amount(s: &str) -> Result<Self, ParseAmountError> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().map_err(|_| bad(s, "invalid numerator"))?;
            let d: f64 = d.trim().parse().map_err(|_| bad(s, "invalid denominator"))?;
            if d == 0.0 {
                return Err(bad(s, "zero denominator"));
            }
            return Ok(n / d);
        }
        let v: f64 = s.parse().map_err(|_| bad(s, "not a number"))?;
        if !v.is_finite() {
            return Err(bad(s, "not finite"));
        }
        Ok(v)
    }

    fn sum_of<'a, I>(terms: I) -> Self
    where
        I: IntoIterator<Item = &'a Self>,
    {
        neumaier_sum(terms.into_iter().copied())
    }
}

impl Amount for Exact {
    fn from_ratio(num: i64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_exact(v: &Exact) -> Self {
        v.clone()
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn as_exact(&self) -> Option<Exact> {
        Some(self.clone())
    }

    fn parse_amount(s: &str) -> Result<Self, ParseAmountError> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad(s, "invalid numerator"))?;
            let d: BigInt = d.trim().parse().map_err(|_| bad(s, "invalid denominator"))?;
            if d.is_zero() {
                return Err(bad(s, "zero denominator"));
            }
            return Ok(BigRational::new(n, d));
        }
        parse_decimal(s)
    }
}

fn bad(input: &str, reason: &'static str) -> ParseAmountError {
    ParseAmountError {
        input: input.to_string(),
        reason,
    }
}

/// Parses `[-]digits[.digits]` into an exact rational.
fn parse_decimal(s: &str) -> Result<Exact, ParseAmountError> {
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(s, "empty number"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad(s, "not a decimal number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad(s, "not a decimal number"))?
    };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = BigRational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Neumaier's variant of Kahan summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Numeric backend selected per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    #[default]
    Float,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Exact => f.write_str("exact"),
            NumericMode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for NumericMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "exact" => Ok(NumericMode::Exact),
            "float" => Ok(NumericMode::Float),
            other => Err(format!("unknown numeric mode {other:?} (expected exact|float)")),
        }
    }
}
