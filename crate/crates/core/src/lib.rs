//! Simulation and numerical analysis of Labouchère-style list betting systems.
//!
//! * [`betting`]: exact state machines (Labouchère, Fibonacci, abstract list
//!   systems driven by a policy) and single-episode execution.
//! * [`stopping`]: the exact law of the stopping time by dynamic programming
//!   on the list length, and its `n^{-3/2} ρ^{n/3}` tail.
//! * [`optimal`]: least fixed points of the recursion for the per-unit-target
//!   lower bound `a_l` on the expected largest bet of constrained list
//!   systems.
//! * [`estimators`]: seeded parallel batches, tail and truncated-moment
//!   estimators, importance sampling and growth classification.

pub mod amount;
pub mod betting;
pub mod estimators;
pub mod optimal;
pub mod rng;
pub mod stopping;

pub use amount::{Amount, Exact, NumericMode};
