use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Environment, StartRegion};
use crate::error::{Error, Result};
use crate::fuzzy::ActionBound;
use crate::rng::{hash_unit, stream};
use crate::scalar::Scalar;

/// Ground-truth label of one channel of a distractor-wrapped state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    /// Feature `j` of the wrapped system.
    True(usize),
    /// Autonomous noise, unrelated to the system.
    Irrelevant,
    /// Noisy affine copy of true feature `source`.
    Redundant { source: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RedundantChannel<F> {
    source: usize,
    gain: F,
    offset: F,
    noise: F,
}

/// Appends irrelevant and redundant channels to a base system's state.
///
/// State layout: base features, then `n_irrelevant` bounded random walks in
/// `[-1, 1]`, then the redundant copies. The channel noise is a hash of the
/// channel's own input bits, so stepping stays a pure function.
#[derive(Clone, Debug)]
pub struct WithDistractors<E, F> {
    base: E,
    n_irrelevant: usize,
    redundant: Vec<RedundantChannel<F>>,
    seed: u64,
    walk_step: F,
}

impl<F: Scalar, E: Environment<F>> WithDistractors<E, F> {
    pub fn new(base: E, n_irrelevant: usize, n_redundant: usize, seed: u64) -> Self {
        let mut rng = stream(seed, &[0xD157]);
        let dim = base.state_dim();
        let scales = base.feature_scales();
        let redundant = (0..n_redundant)
            .map(|k| {
                let source = k % dim;
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                RedundantChannel {
                    source,
                    gain: F::of(sign * rng.random_range(0.5..2.0)),
                    offset: F::of(rng.random_range(-0.5..0.5)),
                    noise: F::of(0.1) * scales[source],
                }
            })
            .collect();
        Self {
            base,
            n_irrelevant,
            redundant,
            seed,
            walk_step: F::of(0.1),
        }
    }

    pub fn base(&self) -> &E {
        &self.base
    }

    pub fn channel_map(&self) -> Vec<ChannelKind> {
        (0..self.base.state_dim())
            .map(ChannelKind::True)
            .chain(std::iter::repeat_n(ChannelKind::Irrelevant, self.n_irrelevant))
            .chain(self.redundant.iter().map(|r| ChannelKind::Redundant { source: r.source }))
            .collect()
    }

    fn key(&self, channel: usize, value: F) -> u64 {
        value.as_f64().to_bits() ^ crate::rng::derive(self.seed, &[channel as u64])
    }

    fn fill_redundant(&self, base_state: &[F], out: &mut [F]) {
        let offset = self.base.state_dim() + self.n_irrelevant;
        for (k, ch) in self.redundant.iter().enumerate() {
            let x = base_state[ch.source];
            let u = F::of(hash_unit(self.key(offset + k, x)));
            out[k] = ch.gain * (x + ch.noise * u) + ch.offset;
        }
    }
}

impl<F: Scalar, E: Environment<F>> Environment<F> for WithDistractors<E, F> {
    fn name(&self) -> String {
        format!(
            "{}+distractors({},{})",
            self.base.name(),
            self.n_irrelevant,
            self.redundant.len()
        )
    }

    fn state_dim(&self) -> usize {
        self.base.state_dim() + self.n_irrelevant + self.redundant.len()
    }

    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        self.base.action_bounds()
    }

    fn feature_scales(&self) -> Vec<F> {
        let base = self.base.feature_scales();
        let mut out = base.clone();
        out.extend(std::iter::repeat_n(F::one(), self.n_irrelevant));
        out.extend(self.redundant.iter().map(|r| r.gain.abs() * base[r.source]));
        out
    }

    fn step_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        let dim = self.state_dim();
        if state.len() != dim || next.len() != dim {
            return Err(Error::structure(format!("expected state dimension {dim}")));
        }
        let b = self.base.state_dim();
        let reward = self.base.step_into(&state[..b], action, &mut next[..b])?;
        let one = F::one();
        for k in 0..self.n_irrelevant {
            let x = state[b + k];
            let mut y = x + self.walk_step * F::of(hash_unit(self.key(b + k, x)));
            if y > one {
                y = one + one - y;
            } else if y < -one {
                y = -one - one - y;
            }
            next[b + k] = y;
        }
        let (base_next, extra) = next.split_at_mut(b + self.n_irrelevant);
        self.fill_redundant(&base_next[..b], extra);
        Ok(reward)
    }

    fn sample_initial(&self, region: &StartRegion<F>, rng: &mut dyn RngCore) -> Vec<F> {
        let mut s = self.base.sample_initial(region, rng);
        for _ in 0..self.n_irrelevant {
            s.push(rng.random_range(F::of(-1.0)..F::one()));
        }
        let mut extra = vec![F::zero(); self.redundant.len()];
        self.fill_redundant(&s, &mut extra);
        s.extend(extra);
        s
    }
}
