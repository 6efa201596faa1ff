//! Ground-truth dynamics and the batch transition data sampled from them.

mod cartpole;
mod distractor;

pub use cartpole::{CartPole, CartPoleState};
pub use distractor::{ChannelKind, WithDistractors};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fuzzy::ActionBound;
use crate::scalar::Scalar;

/// Per-dimension sampling interval; `lo == hi` pins the coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Scalar> Interval<F> {
    pub fn new(lo: F, hi: F) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: F) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> F {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }
}

/// Box of initial states over the base system's coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartRegion<F> {
    pub ranges: Vec<Interval<F>>,
}

impl<F: Scalar> StartRegion<F> {
    pub fn new(ranges: Vec<Interval<F>>) -> Self {
        Self { ranges }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<F> {
        self.ranges.iter().map(|r| r.sample(rng)).collect()
    }
}

/// Deterministic system `s' = g(s, a)` with reward `r(s, a, s')`.
pub trait Environment<F: Scalar>: Send + Sync {
    fn name(&self) -> String;

    fn state_dim(&self) -> usize;

    fn action_bounds(&self) -> Vec<ActionBound<F>>;

    fn action_dim(&self) -> usize {
        self.action_bounds().len()
    }

    /// Typical magnitude of each state feature, used to scale synthetic noise.
    fn feature_scales(&self) -> Vec<F> {
        vec![F::one(); self.state_dim()]
    }

    /// Writes the successor state into `next` and returns the reward.
    fn step_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F>;

    fn step(&self, state: &[F], action: &[F]) -> Result<(Vec<F>, F)> {
        let mut next = vec![F::zero(); self.state_dim()];
        let r = self.step_into(state, action, &mut next)?;
        Ok((next, r))
    }

    /// Draws an initial state; `region` covers the base coordinates.
    fn sample_initial(&self, region: &StartRegion<F>, rng: &mut dyn RngCore) -> Vec<F>;
}

impl<F: Scalar, E: Environment<F> + ?Sized> Environment<F> for &E {
    fn name(&self) -> String {
        (**self).name()
    }
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        (**self).action_bounds()
    }
    fn feature_scales(&self) -> Vec<F> {
        (**self).feature_scales()
    }
    fn step_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        (**self).step_into(state, action, next)
    }
    fn sample_initial(&self, region: &StartRegion<F>, rng: &mut dyn RngCore) -> Vec<F> {
        (**self).sample_initial(region, rng)
    }
}

impl<F: Scalar, E: Environment<F> + ?Sized> Environment<F> for Box<E> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        (**self).action_bounds()
    }
    fn feature_scales(&self) -> Vec<F> {
        (**self).feature_scales()
    }
    fn step_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        (**self).step_into(state, action, next)
    }
    fn sample_initial(&self, region: &StartRegion<F>, rng: &mut dyn RngCore) -> Vec<F> {
        (**self).sample_initial(region, rng)
    }
}

/// Draws `n` initial states from `region` with a dedicated seeded stream.
pub fn sample_start_states<F: Scalar, E: Environment<F> + ?Sized>(
    env: &E,
    region: &StartRegion<F>,
    n: usize,
    seed: u64,
) -> Vec<Vec<F>> {
    let mut rng = crate::rng::stream(seed, &[0x5747_4152_5453]);
    (0..n).map(|_| env.sample_initial(region, &mut rng)).collect()
}
