//! Interpretable fuzzy control policies learned from batch transition data.
//!
//! Two learners share one model-based fitness function:
//!
//! * [`fpsrl`] tunes the parameters of a fixed fuzzy rule structure with a
//!   particle swarm, optionally after ranking state features with
//!   [`feature_selection`].
//! * [`gp`] evolves whole fuzzy policies as strongly typed trees and keeps a
//!   complexity/fitness Pareto archive, refined afterwards by
//!   [`local_search`].
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`.

pub mod dataset;
pub mod env;
pub mod error;
pub mod experiment;
pub mod fpsrl;
pub mod fuzzy;
pub mod feature_selection;
pub mod gp;
pub mod local_search;
pub mod model;
pub mod pso;
pub mod rng;
pub mod rollout;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FuzzyPolicy64 = fuzzy::FuzzyPolicy<f64>;
pub type TransitionDataset64 = dataset::TransitionDataset<f64>;
pub type CartPole64 = env::CartPole<f64>;
pub type KnnModel64 = model::KnnModel<f64>;
pub type FitnessConfig64 = rollout::FitnessConfig<f64>;
pub type SwarmConfig64 = pso::SwarmConfig<f64>;
