//! Adaptive interview trees that maximize certainty about a candidate's
//! fitness while keeping designated private answers within fixed ratio
//! bounds at every reachable population.
//!
//! Solvers: [`exact`] (alpha-beta max-min search), [`greedy`] and [`ga`]
//! (basic and greedy-reinforced genetic search). [`verify`] checks trees,
//! [`reduction`] maps set cover onto the decision variant, [`gen`] and
//! [`bench`] drive experiments.

pub mod bench;
pub mod cli;
pub mod exact;
pub mod fixtures;
pub mod ga;
pub mod gen;
pub mod greedy;
pub mod model;
pub mod rational;
pub mod reduction;
mod solve;
pub mod verify;

pub use solve::SolveError;
