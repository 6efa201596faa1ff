//! Discounted returns of model rollouts and the fitness shared by both
//! learners.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyPolicy, Policy};
use crate::model::SystemModel;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessConfig<F> {
    /// Number of rewards summed per rollout; must exceed 1.
    pub horizon: usize,
    pub discount: F,
    pub start_states: Vec<Vec<F>>,
}

impl<F: Scalar> FitnessConfig<F> {
    pub fn new(horizon: usize, discount: F, start_states: Vec<Vec<F>>) -> Result<Self> {
        let cfg = Self {
            horizon,
            discount,
            start_states,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::config("fitness.horizon", "must be greater than 1"));
        }
        if !(self.discount >= F::zero() && self.discount <= F::one()) {
            return Err(Error::config("fitness.discount", "must lie in [0, 1]"));
        }
        if self.start_states.is_empty() {
            return Err(Error::config("fitness.start_states", "at least one start state required"));
        }
        Ok(())
    }
}

/// Shared tally of fitness evaluations. Clones observe the same count.
#[derive(Clone, Debug, Default)]
pub struct EvaluationCounter(Arc<AtomicU64>);

impl EvaluationCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// `sum_{k < T} gamma^k r_k` along the closed-loop model trajectory from `start`.
pub fn rollout_return<F, P, M>(
    policy: &P,
    model: &M,
    start: &[F],
    horizon: usize,
    discount: F,
) -> Result<F>
where
    F: Scalar,
    P: Policy<F> + ?Sized,
    M: SystemModel<F> + ?Sized,
{
    let mut state = start.to_vec();
    let mut next = vec![F::zero(); state.len()];
    let mut action = vec![F::zero(); policy.action_dim()];
    let mut total = F::zero();
    let mut weight = F::one();
    for step in 0..horizon {
        policy.act(&state, &mut action);
        let reward = model.predict_into(&state, &action, &mut next)?;
        if !reward.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        total += weight * reward;
        weight *= discount;
        std::mem::swap(&mut state, &mut next);
    }
    Ok(total)
}

/// Discounted return of an open-loop action sequence laid out step-major.
pub fn sequence_return<F, M>(model: &M, start: &[F], actions: &[F], action_dim: usize, discount: F) -> Result<F>
where
    F: Scalar,
    M: SystemModel<F> + ?Sized,
{
    let mut state = start.to_vec();
    let mut next = vec![F::zero(); state.len()];
    let mut total = F::zero();
    let mut weight = F::one();
    for (step, a) in actions.chunks_exact(action_dim).enumerate() {
        let reward = model.predict_into(&state, a, &mut next)?;
        if !reward.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        total += weight * reward;
        weight *= discount;
        std::mem::swap(&mut state, &mut next);
    }
    Ok(total)
}

/// Sums after sorting so the result does not depend on input order.
fn order_free_mean<F: Scalar>(mut values: Vec<F>) -> F {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite returns"));
    let n = F::from_usize(values.len()).unwrap();
    values.into_iter().fold(F::zero(), |a, v| a + v) / n
}

/// Mean return over the configured start states; counts one evaluation.
pub fn fitness<F, P, M>(policy: &P, model: &M, cfg: &FitnessConfig<F>, counter: &EvaluationCounter) -> Result<F>
where
    F: Scalar,
    P: Policy<F> + ?Sized,
    M: SystemModel<F> + ?Sized,
{
    counter.add(1);
    let returns = cfg
        .start_states
        .iter()
        .enumerate()
        .map(|(start, s0)| {
            rollout_return(policy, model, s0, cfg.horizon, cfg.discount).map_err(|e| Error::Rollout {
                start,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<F>>>()?;
    Ok(order_free_mean(returns))
}

/// A model and fitness configuration bundled with one evaluation counter.
pub struct Evaluator<F, M> {
    pub model: M,
    pub config: FitnessConfig<F>,
    pub counter: EvaluationCounter,
}

impl<F: Scalar, M: SystemModel<F>> Evaluator<F, M> {
    pub fn new(model: M, config: FitnessConfig<F>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            model,
            config,
            counter: EvaluationCounter::new(),
        })
    }

    pub fn fitness<P: Policy<F> + ?Sized>(&self, policy: &P) -> Result<F> {
        fitness(policy, &self.model, &self.config, &self.counter)
    }

    /// Fitness with failures mapped to negative infinity.
    pub fn score<P: Policy<F> + ?Sized>(&self, policy: &P) -> F {
        self.fitness(policy).unwrap_or(F::neg_infinity())
    }

    /// [`Evaluator::score`] on the compiled form of a fuzzy policy.
    pub fn score_fuzzy(&self, policy: &FuzzyPolicy<F>) -> F {
        self.score(&policy.compile())
    }

    pub fn evaluations(&self) -> u64 {
        self.counter.get()
    }

    pub fn state_dim(&self) -> usize {
        self.model.state_dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CartPole, Environment};
    use crate::fuzzy::{ActionBound, FuzzyPolicy, FuzzyRule, RuleBase};
    use crate::model::{exact_model, ModelFingerprint};

    /// Reward sequence read from a script; the state counts steps.
    struct Scripted(Vec<f64>);

    impl SystemModel<f64> for Scripted {
        fn state_dim(&self) -> usize {
            1
        }
        fn action_bounds(&self) -> Vec<ActionBound<f64>> {
            vec![ActionBound::symmetric(1.0)]
        }
        fn predict_into(&self, s: &[f64], _a: &[f64], next: &mut [f64]) -> Result<f64> {
            next[0] = s[0] + 1.0;
            Ok(self.0[s[0] as usize])
        }
        fn fingerprint(&self) -> ModelFingerprint {
            ModelFingerprint { kind: "scripted".into(), dataset: None, k: None }
        }
    }

    fn constant_policy(o: f64, bound: f64) -> FuzzyPolicy<f64> {
        FuzzyPolicy::new(
            vec![RuleBase { rules: vec![FuzzyRule::new(vec![], o)], alpha: 1.0 }],
            vec![ActionBound::symmetric(bound)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn undiscounted_and_discounted_sums() {
        let p = constant_policy(0.0, 1.0);
        let m = Scripted(vec![-1.0; 5]);
        assert_eq!(rollout_return(&p, &m, &[0.0], 2, 1.0).unwrap(), -2.0);
        assert_eq!(rollout_return(&p, &m, &[0.0], 3, 0.5).unwrap(), -1.75);
    }

    #[test]
    fn fitness_is_mean_of_returns_and_counts() {
        let p = constant_policy(0.0, 1.0);
        let m = Scripted(vec![-5.0; 30]);
        let counter = EvaluationCounter::new();
        // starts at step 0 and 2 with T=2: returns -10 and -10
        let one = FitnessConfig::new(2, 1.0, vec![vec![0.0]]).unwrap();
        assert_eq!(fitness(&p, &m, &one, &counter).unwrap(), -10.0);
        let m2 = Scripted(vec![-5.0, -5.0, -10.0, -10.0]);
        let two = FitnessConfig::new(2, 1.0, vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(fitness(&p, &m2, &two, &counter).unwrap(), -15.0);
        assert_eq!(counter.get(), 2);
    }

    #[test]
    fn config_validation() {
        assert!(FitnessConfig::new(1, 0.9, vec![vec![0.0]]).is_err());
        assert!(FitnessConfig::new(5, 1.5, vec![vec![0.0]]).is_err());
        assert!(FitnessConfig::<f64>::new(5, 0.9, vec![]).is_err());
    }

    struct Exploding;

    impl SystemModel<f64> for Exploding {
        fn state_dim(&self) -> usize {
            1
        }
        fn action_bounds(&self) -> Vec<ActionBound<f64>> {
            vec![ActionBound::symmetric(1.0)]
        }
        fn predict_into(&self, s: &[f64], _a: &[f64], next: &mut [f64]) -> Result<f64> {
            next[0] = if s[0] >= 3.0 { f64::NAN } else { s[0] + 1.0 };
            Ok(0.0)
        }
        fn fingerprint(&self) -> ModelFingerprint {
            ModelFingerprint { kind: "exploding".into(), dataset: None, k: None }
        }
    }

    #[test]
    fn non_finite_prediction_reports_step_and_start() {
        let p = constant_policy(0.0, 1.0);
        assert!(matches!(
            rollout_return(&p, &Exploding, &[0.0], 10, 1.0),
            Err(Error::NonFinite { step: 3 })
        ));
        let cfg = FitnessConfig::new(10, 1.0, vec![vec![-50.0], vec![1.0]]).unwrap();
        match fitness(&p, &Exploding, &cfg, &EvaluationCounter::new()) {
            Err(Error::Rollout { start: 1, source }) => {
                assert!(matches!(*source, Error::NonFinite { step: 2 }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cartpole_zero_policy_matches_hand_loop() {
        let env = CartPole::<f64>::new();
        let model = exact_model(env.clone());
        let p = constant_policy(0.0, 30.0);
        let s0 = [std::f64::consts::PI, 0.0, 0.0, 0.0];
        let got = rollout_return(&p, &model, &s0, 500, 0.994).unwrap();
        let mut s = s0.to_vec();
        let mut expect = 0.0;
        for k in 0..500 {
            let (n, r) = env.step(&s, &[0.0]).unwrap();
            expect += 0.994f64.powi(k) * r;
            s = n;
        }
        assert!((got - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn fitness_ignores_start_order_and_respects_reward_bounds() {
        let env = CartPole::<f64>::new();
        let model = exact_model(env.clone());
        let starts = crate::env::sample_start_states(&env, &CartPole::evaluation_region(), 17, 3);
        let mut reversed = starts.clone();
        reversed.reverse();
        let p = FuzzyPolicy::new(
            vec![RuleBase {
                rules: vec![
                    FuzzyRule::new(vec![crate::fuzzy::MembershipClause::new(0, 0.5, 0.4)], 2.0),
                    FuzzyRule::new(vec![crate::fuzzy::MembershipClause::new(1, -0.5, 1.3)], -1.0),
                ],
                alpha: 0.8,
            }],
            env.action_bounds(),
            None,
        )
        .unwrap();
        let (t, g) = (120, 0.97);
        let c = EvaluationCounter::new();
        let a = fitness(&p, &model, &FitnessConfig::new(t, g, starts.clone()).unwrap(), &c).unwrap();
        let b = fitness(&p, &model, &FitnessConfig::new(t, g, reversed).unwrap(), &c).unwrap();
        assert_eq!(a, b);
        let floor = -(1.0 - g.powi(t as i32)) / (1.0 - g);
        for s0 in &starts {
            let r = rollout_return(&p, &model, s0, t, g).unwrap();
            assert!(r <= 0.0 && r >= floor - 1e-9);
        }
    }

    #[test]
    fn open_loop_sequence_return() {
        let m = Scripted(vec![-1.0, -2.0, -3.0]);
        let r = sequence_return(&m, &[0.0], &[0.0, 0.0, 0.0], 1, 0.5).unwrap();
        assert_eq!(r, -1.0 - 1.0 - 0.75);
    }
}
