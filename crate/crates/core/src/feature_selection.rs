//! Feature ranking from model-optimal actions.
//!
//! A receding-horizon planner (PSO-P) labels each sampled state with the
//! first action of the best open-loop sequence found by a particle swarm.
//! Features are then ranked per action dimension by greedy forward selection
//! on histogram mutual information, penalizing redundancy with the features
//! already chosen:
//!
//! ```text
//! score(f) = I(f; a) - 1/|S| * sum_{g in S} I(f; g) / H(g)
//! ```
//!
//! This normalized-redundancy criterion is a reconstruction in the spirit of
//! adaptive MI feature selection; terms with `H(g) = 0` are skipped.

use std::sync::Mutex;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::pso::{pso_maximize, SwarmConfig, Topology};
use crate::rng::{derive, stream};
use crate::rollout::sequence_return;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsopSettings<F> {
    /// Planning horizon in steps.
    pub horizon: usize,
    pub discount: F,
    pub swarm_size: usize,
    pub iterations: usize,
    pub topology: Topology,
    pub seed: u64,
}

impl<F: Scalar> PsopSettings<F> {
    pub fn new(horizon: usize, discount: F, swarm_size: usize, iterations: usize, seed: u64) -> Self {
        Self {
            horizon,
            discount,
            swarm_size,
            iterations,
            topology: Topology::Ring { radius: 2 },
            seed,
        }
    }

    /// Sequence evaluations per planned state.
    pub fn budget(&self) -> u64 {
        (self.swarm_size * self.iterations) as u64
    }
}

/// First action of the best action sequence found from `state`.
///
/// Particle 0 starts at the constant mid-range sequence. Where every
/// sequence earns the same return, that neutral plan is kept, so states
/// without a reachable reward map to one action instead of noise.
///
/// `key` selects the random stream so independent states can be planned
/// concurrently.
pub fn psop_action<F, M>(model: &M, state: &[F], settings: &PsopSettings<F>, key: u64) -> Result<Vec<F>>
where
    F: Scalar,
    M: SystemModel<F> + ?Sized,
{
    if settings.horizon == 0 {
        return Err(Error::config("feature_selection.horizon", "must be at least 1"));
    }
    let bounds = model.action_bounds();
    let ad = bounds.len();
    let boxes: Vec<(F, F)> = (0..settings.horizon)
        .flat_map(|_| bounds.iter().map(|b| (b.lo, b.hi)))
        .collect();
    let mut cfg = SwarmConfig::new(boxes, settings.swarm_size, settings.iterations, derive(settings.seed, &[key]));
    cfg.topology = settings.topology;
    cfg.initial = vec![(0..settings.horizon).flat_map(|_| bounds.iter().map(|b| b.center())).collect()];
    let failure = Mutex::new(None);
    let objective = |x: &[F]| match sequence_return(model, state, x, ad, settings.discount) {
        Ok(r) => r,
        Err(e) => {
            failure.lock().expect("poisoned").get_or_insert(e);
            F::neg_infinity()
        }
    };
    let result = pso_maximize(objective, cfg)?;
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(result.best[..ad].to_vec())
}

/// States paired with their planned first actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalPairSet<F> {
    pub states: Vec<Vec<F>>,
    pub actions: Vec<Vec<F>>,
    pub settings: PsopSettings<F>,
    /// Open-loop sequence evaluations spent.
    pub evaluations: u64,
}

impl<F: Scalar> OptimalPairSet<F> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Plans an action for up to `max_states` of `states`, drawn without
/// replacement (all of them when `max_states` is `None`).
pub fn optimal_pairs<F, M>(
    model: &M,
    states: &[Vec<F>],
    max_states: Option<usize>,
    settings: &PsopSettings<F>,
) -> Result<OptimalPairSet<F>>
where
    F: Scalar,
    M: SystemModel<F> + ?Sized,
{
    let chosen: Vec<Vec<F>> = match max_states {
        Some(n) if n < states.len() => {
            let mut idx = sample(&mut stream(settings.seed, &[0x5E1]), states.len(), n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| states[i].clone()).collect()
        }
        _ => states.to_vec(),
    };
    let actions = chosen
        .par_iter()
        .enumerate()
        .map(|(i, s)| psop_action(model, s, settings, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimalPairSet {
        evaluations: settings.budget() * chosen.len() as u64,
        states: chosen,
        actions,
        settings: settings.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: usize,
    pub score: f64,
}

/// Selected features per action dimension, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub actions: Vec<Vec<FeatureScore>>,
}

impl FeatureRanking {
    pub fn features(&self, action: usize) -> Vec<usize> {
        self.actions[action].iter().map(|f| f.feature).collect()
    }
}

/// Equal-frequency bin index of every value; equal values share a bin.
pub fn equal_frequency_bins<F: Scalar>(values: &[F], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut out = vec![0; n];
    let mut first = 0;
    for r in 0..n {
        if r > 0 && values[order[r]] != values[order[r - 1]] {
            first = r;
        }
        out[order[r]] = first * bins / n;
    }
    out
}

/// Entropy in nats of a discrete label vector.
pub fn entropy(labels: &[usize], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    labels.iter().for_each(|&l| counts[l] += 1);
    let n = labels.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information in nats of two discrete label vectors.
pub fn mutual_information(x: &[usize], y: &[usize], bins: usize) -> f64 {
    let n = x.len() as f64;
    let mut joint = vec![0usize; bins * bins];
    let (mut px, mut py) = (vec![0usize; bins], vec![0usize; bins]);
    for (&a, &b) in x.iter().zip(y) {
        joint[a * bins + b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let mut mi = 0.0;
    for a in 0..bins {
        for b in 0..bins {
            let c = joint[a * bins + b];
            if c > 0 {
                let pab = c as f64 / n;
                mi += pab * (pab * n * n / (px[a] as f64 * py[b] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Greedy forward ranking of `n_select` features for every action dimension.
pub fn rank_features<F: Scalar>(pairs: &OptimalPairSet<F>, n_select: usize, bins: usize) -> Result<FeatureRanking> {
    if pairs.len() < 100 {
        return Err(Error::config("feature_selection.states", "at least 100 state/action pairs required"));
    }
    if bins < 2 {
        return Err(Error::config("feature_selection.bins", "at least 2 bins required"));
    }
    let dim = pairs.states[0].len();
    if n_select > dim {
        return Err(Error::config("feature_selection.n_select", format!("must not exceed {dim}")));
    }
    let column = |f: usize| -> Vec<F> { pairs.states.iter().map(|s| s[f]).collect() };
    let features: Vec<Vec<usize>> = (0..dim).map(|f| equal_frequency_bins(&column(f), bins)).collect();
    let h: Vec<f64> = features.iter().map(|f| entropy(f, bins)).collect();
    // pairwise terms computed once, on demand
    let mut pair_mi = vec![None; dim * dim];
    let action_dim = pairs.actions[0].len();
    let mut out = Vec::with_capacity(action_dim);
    for a in 0..action_dim {
        let target: Vec<F> = pairs.actions.iter().map(|v| v[a]).collect();
        let target = equal_frequency_bins(&target, bins);
        let relevance: Vec<f64> = features.iter().map(|f| mutual_information(f, &target, bins)).collect();
        let mut selected: Vec<FeatureScore> = Vec::with_capacity(n_select);
        let mut left: Vec<usize> = (0..dim).collect();
        while selected.len() < n_select {
            let mut best: Option<(usize, f64, bool)> = None;
            for &f in &left {
                let informative = h[f] > 0.0;
                let mut score = if informative { relevance[f] } else { 0.0 };
                if informative && !selected.is_empty() {
                    let mut penalty = 0.0;
                    for g in &selected {
                        if h[g.feature] > 0.0 {
                            let key = f.min(g.feature) * dim + f.max(g.feature);
                            let mi = *pair_mi[key]
                                .get_or_insert_with(|| mutual_information(&features[f], &features[g.feature], bins));
                            penalty += mi / h[g.feature];
                        }
                    }
                    score -= penalty / selected.len() as f64;
                }
                let better = match best {
                    None => true,
                    Some((_, s, inf)) => (informative && !inf) || (informative == inf && score > s),
                };
                if better {
                    best = Some((f, score, informative));
                }
            }
            let (f, score, _) = best.expect("candidates remain");
            left.retain(|&x| x != f);
            selected.push(FeatureScore { feature: f, score });
        }
        out.push(selected);
    }
    Ok(FeatureRanking { actions: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CartPole, Environment};
    use crate::fuzzy::ActionBound;
    use crate::model::{exact_model, ModelFingerprint};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn synthetic(n: usize, seed: u64, build: impl Fn(&[f64]) -> (Vec<f64>, f64)) -> OptimalPairSet<f64> {
        let mut rng = stream(seed, &[]);
        let mut states = Vec::new();
        let mut actions = Vec::new();
        for _ in 0..n {
            let noise: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
            let (s, a) = build(&noise);
            states.push(s);
            actions.push(vec![a]);
        }
        OptimalPairSet { states, actions, settings: PsopSettings::new(1, 1.0, 2, 1, 0), evaluations: 0 }
    }

    #[test]
    fn bins_are_equal_frequency_and_tie_aware() {
        assert_eq!(equal_frequency_bins(&[3.0, 1.0, 2.0, 4.0], 2), vec![1, 0, 0, 1]);
        assert_eq!(equal_frequency_bins(&[5.0; 6], 3), vec![0; 6]);
        assert_eq!(equal_frequency_bins(&[1.0, 1.0, 1.0, 2.0], 2), vec![0, 0, 0, 1]);
        assert_eq!(entropy(&[0; 6], 3), 0.0);
        let x = [0, 1, 0, 1];
        assert!((mutual_information(&x, &x, 2) - 2f64.ln()).abs() < 1e-12);
        assert!(mutual_information(&x, &[0, 0, 1, 1], 2).abs() < 1e-12);
    }

    #[test]
    fn copied_feature_ranks_first() {
        let pairs = synthetic(500, 1, |z| (z[..4].to_vec(), z[2] + 0.05 * z[4]));
        let r = rank_features(&pairs, 4, 8).unwrap();
        assert_eq!(r.actions[0][0].feature, 2);
        let mut all = r.features(0);
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicate_ranks_below_informative_feature() {
        // a depends on f0 and f1; f2 duplicates f0; f3 is constant; f4 is noise
        let pairs = synthetic(800, 2, |z| (vec![z[0], z[1], z[0], 1.0, z[2]], z[0] + 0.7 * z[1] + 0.05 * z[3]));
        let order = rank_features(&pairs, 5, 8).unwrap().features(0);
        let pos = |f| order.iter().position(|&x| x == f).unwrap();
        assert_eq!(order[0], 0);
        assert!(pos(1) < pos(2));
        assert_eq!(pos(3), 4);
    }

    #[test]
    fn constant_feature_never_precedes_informative() {
        let pairs = synthetic(300, 3, |z| (vec![7.0, z[0], z[1]], z[1]));
        let order = rank_features(&pairs, 3, 6).unwrap().features(0);
        assert_eq!(order, vec![2, 1, 0]);
    }

    #[test]
    fn invariant_under_cubing_a_feature() {
        let pairs = synthetic(600, 4, |z| (z[..5].to_vec(), z[1] - 0.5 * z[3] + 0.3 * z[5]));
        let mut cubed = pairs.clone();
        cubed.states.iter_mut().for_each(|s| s[3] = s[3].powi(3));
        assert_eq!(rank_features(&pairs, 5, 10).unwrap(), rank_features(&cubed, 5, 10).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        let pairs = synthetic(100, 5, |z| (z[..3].to_vec(), z[0]));
        assert!(rank_features(&pairs, 4, 8).is_err());
        assert!(rank_features(&pairs, 3, 1).is_err());
        let small = synthetic(99, 5, |z| (z[..3].to_vec(), z[0]));
        assert!(rank_features(&small, 1, 8).is_err());
    }

    /// Reward `-(a - 0.3)^2`, no state dynamics.
    struct Concave;

    impl SystemModel<f64> for Concave {
        fn state_dim(&self) -> usize {
            1
        }
        fn action_bounds(&self) -> Vec<ActionBound<f64>> {
            vec![ActionBound::new(-1.0, 2.0)]
        }
        fn predict_into(&self, s: &[f64], a: &[f64], next: &mut [f64]) -> Result<f64> {
            next[0] = s[0];
            Ok(-(a[0] - 0.3).powi(2))
        }
        fn fingerprint(&self) -> ModelFingerprint {
            ModelFingerprint { kind: "concave".into(), dataset: None, k: None }
        }
    }

    #[test]
    fn one_step_plan_matches_grid_search() {
        let grid = (0..=1000)
            .map(|i| -1.0 + 3.0 * i as f64 / 1000.0)
            .max_by(|a, b| (-(a - 0.3f64).powi(2)).partial_cmp(&-(b - 0.3f64).powi(2)).unwrap())
            .unwrap();
        let settings = PsopSettings::new(1, 1.0, 20, 30, 3);
        let a = psop_action(&Concave, &[0.0], &settings, 0).unwrap();
        assert!((a[0] - grid).abs() <= 0.05 * 1.5);
        assert_eq!(a, psop_action(&Concave, &[0.0], &settings, 0).unwrap());
    }

    #[test]
    fn upright_plan_keeps_neutral_action_on_ties() {
        let env = CartPole::<f64>::new();
        let model = exact_model(env.clone());
        let settings = PsopSettings::new(20, 0.99, 30, 30, 1);
        assert_eq!(sequence_return(&model, &[0.0; 4], &[0.0; 20], 1, 0.99).unwrap(), 0.0);
        let a = psop_action(&model, &[0.0; 4], &settings, 0).unwrap();
        assert_eq!(a, vec![0.0]);
    }

    #[test]
    fn off_center_plan_reaches_goal() {
        let env = CartPole::<f64>::new();
        let model = exact_model(env.clone());
        let settings = PsopSettings::new(20, 0.99, 30, 30, 1);
        let s = [0.0, 0.0, 0.7, 0.0];
        let a = psop_action(&model, &s, &settings, 0).unwrap();
        assert!(env.action_bounds()[0].contains(a[0]));
        assert!(sequence_return(&model, &s, &[0.0; 20], 1, 0.99).unwrap() < 0.0);
        assert_ne!(a[0], 0.0);
    }
}
