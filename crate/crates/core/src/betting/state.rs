use serde::{Deserialize, Serialize};

use super::BettingError;
use crate::amount::Amount;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Loss,
}

/// Abstract list-system state: remaining target and list length.
///
/// A state is terminated exactly when its length is zero, and a terminated state
/// always has zero target. A policy may legally bet the whole target from
/// length three and win, which leaves a positive length with zero target; the
/// process then continues with zero bets until the length reaches zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<A> {
    target: A,
    length: usize,
}

impl<A: Amount> SystemState<A> {
    /// Initial state. Requires a positive target and a positive length.
    pub fn new(target: A, length: usize) -> Result<Self, BettingError> {
        if length == 0 {
            return Err(BettingError::InvalidLength);
        }
        if !target.is_positive() {
            return Err(BettingError::InvalidConfig(format!(
                "initial target must be positive, got {target}"
            )));
        }
        Ok(Self { target, length })
    }

    pub(crate) fn from_parts(target: A, length: usize) -> Self {
        Self { target, length }
    }

    pub fn terminal() -> Self {
        Self {
            target: A::zero(),
            length: 0,
        }
    }

    pub fn target(&self) -> &A {
        &self.target
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn is_terminated(&self) -> bool {
        self.length == 0
    }

    /// Whether the next bet is forced to equal the whole target.
    pub fn full_bet_forced(&self) -> bool {
        matches!(self.length, 1 | 2)
    }
}

/// One coup of the abstract list system.
///
/// A win lowers the target by the bet and the length by two (floored at
/// zero); a loss raises the target by the bet and the length by one. Bets
/// must lie in `[0, target]`, and at lengths one and two the bet must be the
/// whole target so that reaching length zero clears the target.
pub fn list_system_step<A: Amount>(
    state: &SystemState<A>,
    bet: &A,
    outcome: Outcome,
) -> Result<SystemState<A>, BettingError> {
    if state.is_terminated() {
        return Err(BettingError::AlreadyTerminated);
    }
    if *bet < A::zero() || *bet > state.target {
        return Err(BettingError::BetOutOfRange {
            bet: bet.to_string(),
            target: state.target.to_string(),
        });
    }
    if state.full_bet_forced() && *bet != state.target {
        return Err(BettingError::TerminationViolation {
            length: state.length,
            bet: bet.to_string(),
            target: state.target.to_string(),
        });
    }
    let next = match outcome {
        Outcome::Win => {
            let length = state.length.saturating_sub(2);
            let target = if length == 0 {
                A::zero()
            } else {
                state.target.clone() - bet.clone()
            };
            SystemState { target, length }
        }
        Outcome::Loss => SystemState {
            target: state.target.clone() + bet.clone(),
            length: state.length + 1,
        },
    };
    Ok(next)
}
