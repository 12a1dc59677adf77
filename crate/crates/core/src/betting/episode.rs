use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{list_system_step, validate_bet, BetConstraints, BettingError, BettingList, Outcome, SystemState};
use crate::amount::Amount;

/// Something that places one bet per coup until its list empties.
pub trait BettingProcess<A: Amount> {
    fn state(&self) -> SystemState<A>;

    fn is_terminated(&self) -> bool;

    /// Chooses the bet for the next coup, settles `outcome`, and returns the bet.
    fn play(&mut self, outcome: Outcome) -> Result<A, BettingError>;
}

/// Which pair of entries a concrete list system works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ListRule {
    /// First and last entries.
    Labouchere,
    /// Last two entries.
    Fibonacci,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListSystem<A> {
    rule: ListRule,
    list: BettingList<A>,
}

impl<A: Amount> ListSystem<A> {
    pub fn new(rule: ListRule, list: BettingList<A>) -> Self {
        Self { rule, list }
    }

    pub fn labouchere(list: BettingList<A>) -> Self {
        Self::new(ListRule::Labouchere, list)
    }

    pub fn fibonacci(list: BettingList<A>) -> Self {
        Self::new(ListRule::Fibonacci, list)
    }

    pub fn rule(&self) -> ListRule {
        self.rule
    }

    pub fn list(&self) -> &BettingList<A> {
        &self.list
    }

    pub fn next_bet(&self) -> Result<A, BettingError> {
        match self.rule {
            ListRule::Labouchere => self.list.labouchere_bet(),
            ListRule::Fibonacci => self.list.fibonacci_bet(),
        }
    }
}

impl<A: Amount> BettingProcess<A> for ListSystem<A> {
    fn state(&self) -> SystemState<A> {
        if self.list.is_empty() {
            SystemState::terminal()
        } else {
            SystemState::from_parts(self.list.total().clone(), self.list.len())
        }
    }

    fn is_terminated(&self) -> bool {
        self.list.is_empty()
    }

    fn play(&mut self, outcome: Outcome) -> Result<A, BettingError> {
        match self.rule {
            ListRule::Labouchere => self.list.apply_labouchere(outcome),
            ListRule::Fibonacci => self.list.apply_fibonacci(outcome),
        }
    }
}

/// Chooses a bet from the abstract state. Only consulted at lengths of three
/// or more; lengths one and two always bet the whole target.
pub trait BetPolicy<A> {
    fn bet(&mut self, state: &SystemState<A>) -> A;
}

impl<A, F> BetPolicy<A> for F
where
    F: FnMut(&SystemState<A>) -> A,
{
    fn bet(&mut self, state: &SystemState<A>) -> A {
        self(state)
    }
}

/// Bets a fixed fraction of the current target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionalPolicy {
    fraction: f64,
}

impl ProportionalPolicy {
    pub fn new(fraction: f64) -> Result<Self, BettingError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(BettingError::InvalidConfig(format!(
                "betting fraction {fraction} outside [0, 1]"
            )));
        }
        Ok(Self { fraction })
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }
}

impl<A: Amount> BetPolicy<A> for ProportionalPolicy {
    fn bet(&mut self, state: &SystemState<A>) -> A {
        let fraction = A::from_f64(self.fraction).expect("fraction is finite");
        state.target().clone() * fraction
    }
}

/// Abstract list system driven by a policy, checked by [`list_system_step`].
#[derive(Debug, Clone)]
pub struct PolicySystem<A, P> {
    state: SystemState<A>,
    policy: P,
}

impl<A: Amount, P: BetPolicy<A>> PolicySystem<A, P> {
    pub fn new(state: SystemState<A>, policy: P) -> Self {
        Self { state, policy }
    }
}

impl<A: Amount, P: BetPolicy<A>> BettingProcess<A> for PolicySystem<A, P> {
    fn state(&self) -> SystemState<A> {
        self.state.clone()
    }

    fn is_terminated(&self) -> bool {
        self.state.is_terminated()
    }

    fn play(&mut self, outcome: Outcome) -> Result<A, BettingError> {
        let bet = if self.state.full_bet_forced() {
            self.state.target().clone()
        } else {
            self.policy.bet(&self.state)
        };
        self.state = list_system_step(&self.state, &bet, outcome)?;
        Ok(bet)
    }
}

/// One settled coup, as seen by an observer.
#[derive(Debug, Clone, PartialEq)]
pub struct Coup<A> {
    /// 1-based coup number.
    pub index: usize,
    pub before: SystemState<A>,
    pub bet: A,
    pub outcome: Outcome,
    pub after: SystemState<A>,
}

/// Summary of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<A> {
    /// Stopping time, or the number of coups played when censored.
    pub n_coups: usize,
    /// Largest bet placed.
    pub b_star: A,
    /// Largest target reached, including the initial target.
    pub t_star: A,
    pub sum_bets: A,
    pub wins: usize,
    pub losses: usize,
    /// The episode stopped before the list emptied.
    pub censored: bool,
    pub final_target: A,
    pub seed: u64,
}

impl<A: Amount> EpisodeRecord<A> {
    pub fn map<B, F: Fn(&A) -> B>(&self, f: F) -> EpisodeRecord<B> {
        EpisodeRecord {
            n_coups: self.n_coups,
            b_star: f(&self.b_star),
            t_star: f(&self.t_star),
            sum_bets: f(&self.sum_bets),
            wins: self.wins,
            losses: self.losses,
            censored: self.censored,
            final_target: f(&self.final_target),
            seed: self.seed,
        }
    }

    pub fn to_f64(&self) -> EpisodeRecord<f64> {
        self.map(Amount::to_f64)
    }
}

/// Independent coups with win probability `p`.
pub fn bernoulli_outcomes<R: Rng>(rng: &mut R, p: f64) -> impl Iterator<Item = Outcome> + '_ {
    std::iter::repeat_with(move || {
        if rng.random_bool(p) {
            Outcome::Win
        } else {
            Outcome::Loss
        }
    })
}

/// Plays `process` against `outcomes` until the list empties, `cutoff` coups
/// have been played, or the outcomes run out (the last two count as censored).
pub fn run_episode<A, S, I>(process: &mut S, outcomes: I, cutoff: usize) -> Result<EpisodeRecord<A>, BettingError>
where
    A: Amount,
    S: BettingProcess<A>,
    I: IntoIterator<Item = Outcome>,
{
    run_episode_with(process, outcomes, cutoff, None, |_| {})
}

/// [`run_episode`] with optional bet validation and a per-coup observer.
pub fn run_episode_with<A, S, I, F>(
    process: &mut S,
    outcomes: I,
    cutoff: usize,
    constraints: Option<&BetConstraints>,
    mut observer: F,
) -> Result<EpisodeRecord<A>, BettingError>
where
    A: Amount,
    S: BettingProcess<A>,
    I: IntoIterator<Item = Outcome>,
    F: FnMut(&Coup<A>),
{
    if cutoff == 0 {
        return Err(BettingError::InvalidConfig("cutoff must be at least 1".into()));
    }
    if process.is_terminated() {
        return Err(BettingError::InvalidConfig(
            "episode must start from a non-terminated state".into(),
        ));
    }

    let mut before = process.state();
    let mut record = EpisodeRecord {
        n_coups: 0,
        b_star: A::zero(),
        t_star: before.target().clone(),
        sum_bets: A::zero(),
        wins: 0,
        losses: 0,
        censored: true,
        final_target: before.target().clone(),
        seed: 0,
    };

    let mut outcomes = outcomes.into_iter();
    while record.n_coups < cutoff {
        let Some(outcome) = outcomes.next() else { break };
        let bet = process.play(outcome)?;
        let after = process.state();
        record.n_coups += 1;
        if let Some(c) = constraints {
            validate_bet(&before, &bet, c).map_err(|violation| BettingError::ConstraintViolated {
                coup: record.n_coups,
                violation,
            })?;
        }
        match outcome {
            Outcome::Win => record.wins += 1,
            Outcome::Loss => record.losses += 1,
        }
        if bet > record.b_star {
            record.b_star = bet.clone();
        }
        if *after.target() > record.t_star {
            record.t_star = after.target().clone();
        }
        record.sum_bets = record.sum_bets.clone() + bet.clone();
        observer(&Coup {
            index: record.n_coups,
            before,
            bet,
            outcome,
            after: after.clone(),
        });
        before = after;
        if before.is_terminated() {
            record.censored = false;
            break;
        }
    }
    record.final_target = before.target().clone();
    Ok(record)
}
