//! Surrogate dynamics used in place of the real system during rollouts.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::TransitionDataset;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::fuzzy::ActionBound;
use crate::scalar::Scalar;

/// Provenance of a model, embedded in result files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFingerprint {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

/// Predicts `(s', r)` from `(s, a)`. Implementations are deterministic.
pub trait SystemModel<F: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;

    fn action_bounds(&self) -> Vec<ActionBound<F>>;

    /// Writes the predicted successor into `next` and returns the reward.
    fn predict_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F>;

    fn predict(&self, state: &[F], action: &[F]) -> Result<(Vec<F>, F)> {
        let mut next = vec![F::zero(); self.state_dim()];
        let r = self.predict_into(state, action, &mut next)?;
        Ok((next, r))
    }

    fn fingerprint(&self) -> ModelFingerprint;
}

impl<F: Scalar, M: SystemModel<F> + ?Sized> SystemModel<F> for &M {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        (**self).action_bounds()
    }
    fn predict_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        (**self).predict_into(state, action, next)
    }
    fn fingerprint(&self) -> ModelFingerprint {
        (**self).fingerprint()
    }
}

impl<F: Scalar, M: SystemModel<F> + ?Sized> SystemModel<F> for Box<M> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        (**self).action_bounds()
    }
    fn predict_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        (**self).predict_into(state, action, next)
    }
    fn fingerprint(&self) -> ModelFingerprint {
        (**self).fingerprint()
    }
}

/// The true dynamics behind the model interface.
#[derive(Clone, Debug)]
pub struct ExactModel<E> {
    env: E,
}

pub fn exact_model<E>(env: E) -> ExactModel<E> {
    ExactModel { env }
}

impl<E> ExactModel<E> {
    pub fn env(&self) -> &E {
        &self.env
    }
}

impl<F: Scalar, E: Environment<F>> SystemModel<F> for ExactModel<E> {
    fn state_dim(&self) -> usize {
        self.env.state_dim()
    }

    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        self.env.action_bounds()
    }

    #[inline]
    fn predict_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        self.env.step_into(state, action, next)
    }

    fn fingerprint(&self) -> ModelFingerprint {
        ModelFingerprint {
            kind: format!("exact:{}", self.env.name()),
            dataset: None,
            k: None,
        }
    }
}

/// k-nearest-neighbor regressor over `(s, a)` inputs.
///
/// Inputs are min/max scaled to `[0, 1]` per column and compared with the
/// Euclidean distance. The prediction is `s` plus the mean state delta of the
/// `k` nearest transitions; the reward is the mean of their rewards. Training
/// rows are kept in a canonical order and distance ties are broken by that
/// order, so the fit does not depend on how the dataset was shuffled.
#[derive(Clone, Debug)]
pub struct KnnModel<F> {
    k: usize,
    state_dim: usize,
    action_dim: usize,
    bounds: Vec<ActionBound<F>>,
    lo: Vec<F>,
    inv_span: Vec<F>,
    inputs: Vec<F>,
    deltas: Vec<F>,
    rewards: Vec<F>,
    dataset: String,
}

pub const DEFAULT_K: usize = 5;

fn lexicographic<F: Scalar>(a: &[F], b: &[F]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) => continue,
            Some(o) => return o,
            None => return x.is_nan().cmp(&y.is_nan()),
        }
    }
    a.len().cmp(&b.len())
}

/// Fits a k-NN model. Action bounds are taken from the recorded actions'
/// range unless supplied by the caller.
pub fn knn_fit<F: Scalar>(
    data: &TransitionDataset<F>,
    k: usize,
    bounds: Option<Vec<ActionBound<F>>>,
) -> Result<KnnModel<F>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > data.len() {
        return Err(Error::config("k", format!("must lie in 1..={}", data.len())));
    }
    data.validate()?;
    let (sd, ad) = (data.state_dim(), data.action_dim());
    let width = sd + ad;

    let mut rows: Vec<(Vec<F>, Vec<F>, F)> = data
        .transitions
        .iter()
        .map(|t| {
            let mut input = t.s.clone();
            input.extend_from_slice(&t.a);
            let delta = t.s_next.iter().zip(&t.s).map(|(n, s)| *n - *s).collect();
            (input, delta, t.r)
        })
        .collect();
    rows.sort_by(|a, b| {
        lexicographic(&a.0, &b.0)
            .then_with(|| lexicographic(&a.1, &b.1))
            .then_with(|| a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal))
    });

    let mut lo = vec![F::infinity(); width];
    let mut hi = vec![F::neg_infinity(); width];
    for (input, _, _) in &rows {
        for j in 0..width {
            lo[j] = lo[j].min(input[j]);
            hi[j] = hi[j].max(input[j]);
        }
    }
    let inv_span: Vec<F> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| if *h > *l { F::one() / (*h - *l) } else { F::one() })
        .collect();

    let mut inputs = Vec::with_capacity(rows.len() * width);
    let mut deltas = Vec::with_capacity(rows.len() * sd);
    let mut rewards = Vec::with_capacity(rows.len());
    for (input, delta, r) in rows {
        inputs.extend(input.iter().enumerate().map(|(j, v)| (*v - lo[j]) * inv_span[j]));
        deltas.extend(delta);
        rewards.push(r);
    }

    let bounds = bounds.unwrap_or_else(|| {
        (0..ad)
            .map(|j| ActionBound::new(lo[sd + j], hi[sd + j]))
            .collect()
    });

    Ok(KnnModel {
        k,
        state_dim: sd,
        action_dim: ad,
        bounds,
        lo,
        inv_span,
        inputs,
        deltas,
        rewards,
        dataset: data.fingerprint(),
    })
}

impl<F: Scalar> KnnModel<F> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Indices of the `k` nearest rows, nearest first.
    fn neighbors(&self, query: &[F]) -> Vec<(F, usize)> {
        let width = self.state_dim + self.action_dim;
        let mut best: Vec<(F, usize)> = Vec::with_capacity(self.k + 1);
        for (i, row) in self.inputs.chunks_exact(width).enumerate() {
            let mut d = F::zero();
            for (x, q) in row.iter().zip(query) {
                let diff = *x - *q;
                d += diff * diff;
            }
            if best.len() == self.k && !(d < best[self.k - 1].0) {
                continue;
            }
            // rows are visited in canonical order, so equal distances keep
            // the earlier row ahead
            let pos = best.partition_point(|(bd, _)| *bd <= d);
            best.insert(pos, (d, i));
            best.truncate(self.k);
        }
        best
    }
}

impl<F: Scalar> SystemModel<F> for KnnModel<F> {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        self.bounds.clone()
    }

    fn predict_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        if state.len() != self.state_dim || action.len() != self.action_dim {
            return Err(Error::structure("query dimension mismatch"));
        }
        let query: Vec<F> = state
            .iter()
            .chain(action)
            .enumerate()
            .map(|(j, v)| (*v - self.lo[j]) * self.inv_span[j])
            .collect();
        let nn = self.neighbors(&query);
        let inv_k = F::one() / F::from_usize(nn.len()).unwrap();
        next.copy_from_slice(state);
        let mut reward = F::zero();
        for (j, out) in next.iter_mut().enumerate() {
            let mut mean = F::zero();
            for (_, i) in &nn {
                mean += self.deltas[i * self.state_dim + j];
            }
            *out += mean * inv_k;
        }
        for (_, i) in &nn {
            reward += self.rewards[*i];
        }
        Ok(reward * inv_k)
    }

    fn fingerprint(&self) -> ModelFingerprint {
        ModelFingerprint {
            kind: "knn".into(),
            dataset: Some(self.dataset.clone()),
            k: Some(self.k),
        }
    }
}
