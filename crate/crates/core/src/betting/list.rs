use std::collections::VecDeque;
use std::fmt;

use super::{BettingError, Outcome};
use crate::amount::Amount;

/// Ordered list of strictly positive amounts. The empty list is the
/// terminal state.
///
/// The running total (the remaining target) is cached so that each coup is
/// O(1) regardless of list length.
#[derive(Clone, Debug, PartialEq)]
pub struct BettingList<A> {
    entries: VecDeque<A>,
    total: A,
}

impl<A: Amount> BettingList<A> {
    pub fn new<I: IntoIterator<Item = A>>(entries: I) -> Result<Self, BettingError> {
        let entries: VecDeque<A> = entries.into_iter().collect();
        if let Some((index, value)) = entries.iter().enumerate().find(|(_, v)| !v.is_positive()) {
            return Err(BettingError::NonPositiveEntry {
                index,
                value: value.to_string(),
            });
        }
        let total = A::sum_of(entries.iter());
        Ok(Self { entries, total })
    }

    pub fn empty() -> Self {
        Self {
            entries: VecDeque::new(),
            total: A::zero(),
        }
    }

    /// Parses a comma separated literal such as `"1,2,3,4"`.
    pub fn parse(literal: &str) -> Result<Self, BettingError> {
        let mut entries = Vec::new();
        for item in literal.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let value = A::parse_amount(item)
                .map_err(|e| BettingError::InvalidConfig(e.to_string()))?;
            entries.push(value);
        }
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of the entries.
    pub fn total(&self) -> &A {
        &self.total
    }

    pub fn entries(&self) -> impl DoubleEndedIterator<Item = &A> + ExactSizeIterator {
        self.entries.iter()
    }

    pub fn to_vec(&self) -> Vec<A> {
        self.entries.iter().cloned().collect()
    }

    pub fn first(&self) -> Option<&A> {
        self.entries.front()
    }

    pub fn last(&self) -> Option<&A> {
        self.entries.back()
    }

    pub fn min_entry(&self) -> Option<&A> {
        self.entries
            .iter()
            .min_by(|a, b| a.partial_cmp(b).expect("amounts are totally ordered"))
    }

    pub(crate) fn labouchere_bet(&self) -> Result<A, BettingError> {
        match self.entries.len() {
            0 => Err(BettingError::EmptyList),
            1 => Ok(self.entries[0].clone()),
            n => Ok(self.entries[0].clone() + self.entries[n - 1].clone()),
        }
    }

    pub(crate) fn fibonacci_bet(&self) -> Result<A, BettingError> {
        match self.entries.len() {
            0 => Err(BettingError::EmptyList),
            1 => Ok(self.entries[0].clone()),
            n => Ok(self.entries[n - 2].clone() + self.entries[n - 1].clone()),
        }
    }

    /// Plays one Labouchère coup in place and returns the bet.
    pub(crate) fn apply_labouchere(&mut self, outcome: Outcome) -> Result<A, BettingError> {
        let bet = self.labouchere_bet()?;
        match outcome {
            Outcome::Win => {
                self.entries.pop_front();
                self.entries.pop_back();
                self.settle_win(&bet);
            }
            Outcome::Loss => {
                self.entries.push_back(bet.clone());
                self.total = self.total.clone() + bet.clone();
            }
        }
        Ok(bet)
    }

    /// Plays one Fibonacci coup in place and returns the bet.
    pub(crate) fn apply_fibonacci(&mut self, outcome: Outcome) -> Result<A, BettingError> {
        let bet = self.fibonacci_bet()?;
        match outcome {
            Outcome::Win => {
                self.entries.pop_back();
                self.entries.pop_back();
                self.settle_win(&bet);
            }
            Outcome::Loss => {
                self.entries.push_back(bet.clone());
                self.total = self.total.clone() + bet.clone();
            }
        }
        Ok(bet)
    }

    fn settle_win(&mut self, bet: &A) {
        // Float totals can drift; the empty list always has target exactly zero.
        self.total = if self.entries.is_empty() {
            A::zero()
        } else {
            self.total.clone() - bet.clone()
        };
    }
}

impl<A: fmt::Display> fmt::Display for BettingList<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

/// First plus last entry; a lone entry is bet on its own.
pub fn labouchere_bet<A: Amount>(list: &BettingList<A>) -> Result<A, BettingError> {
    list.labouchere_bet()
}

/// Win cancels both ends, loss appends the amount just lost.
pub fn labouchere_step<A: Amount>(
    list: &BettingList<A>,
    outcome: Outcome,
) -> Result<BettingList<A>, BettingError> {
    let mut next = list.clone();
    next.apply_labouchere(outcome)?;
    Ok(next)
}

/// Sum of the last two entries; a lone entry is bet on its own.
pub fn fibonacci_bet<A: Amount>(list: &BettingList<A>) -> Result<A, BettingError> {
    list.fibonacci_bet()
}

/// Win cancels the last two entries, loss appends the amount just lost.
pub fn fibonacci_step<A: Amount>(
    list: &BettingList<A>,
    outcome: Outcome,
) -> Result<BettingList<A>, BettingError> {
    let mut next = list.clone();
    next.apply_fibonacci(outcome)?;
    Ok(next)
}

/// A list is good when it is positive, non-decreasing, and its consecutive
/// differences are non-decreasing and never exceed the first entry.
/// Empty and singleton lists are good.
pub fn is_good_list<A: Amount>(list: &BettingList<A>) -> bool {
    let entries: Vec<&A> = list.entries().collect();
    if entries.iter().any(|e| !e.is_positive()) {
        return false;
    }
    if entries.len() < 2 {
        return true;
    }
    let first = entries[0];
    let mut prev_diff: Option<A> = None;
    for pair in entries.windows(2) {
        let diff = pair[1].clone() - pair[0].clone();
        if diff < A::zero() || diff > *first {
            return false;
        }
        if let Some(prev) = &prev_diff {
            if diff < *prev {
                return false;
            }
        }
        prev_diff = Some(diff);
    }
    true
}
