//! Scheduling for the steelmaking-continuous casting problem.
//!
//! A solution is a pair of permutations: the charge order `u`, which drives
//! the steelmaking and refining stages, and the cast order `v`, which drives
//! the continuous casters. [`hierc::solve`] runs the hierarchical
//! Q-learning local search; [`baselines`] holds the reference heuristics and
//! [`bench`] the instance generator and comparison harness.

pub mod baselines;
pub mod bench;
pub mod budget;
pub mod coupling;
pub mod decoder;
pub mod hierc;
pub mod local_search;
pub mod model;
pub mod neighborhoods;
pub mod qlearn;
pub mod renewal;

pub use budget::Budget;
pub use decoder::{decode, evaluate, Evaluation, Schedule};
pub use model::{Instance, ModelError, Solution};
