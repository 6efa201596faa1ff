//! Swarm tuning of a fixed fuzzy rule structure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{decode_values, FuzzyPolicy, ParameterLayout, PolicyContext, SearchBox, WidthClamp};
use crate::model::SystemModel;
use crate::pso::{pso_maximize, SwarmConfig, Topology};
use crate::rollout::Evaluator;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpsrlSettings<F> {
    pub swarm_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub search: SearchBox<F>,
    pub widths: WidthClamp<F>,
    pub topology: Topology,
}

impl<F: Scalar> FpsrlSettings<F> {
    pub fn new(swarm_size: usize, iterations: usize, seed: u64) -> Self {
        Self {
            swarm_size,
            iterations,
            seed,
            search: SearchBox::default(),
            widths: WidthClamp::default(),
            topology: Topology::Ring { radius: 2 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpsrlResult<F> {
    pub policy: FuzzyPolicy<F>,
    pub fitness: F,
    pub evaluations: u64,
    pub history: Vec<F>,
}

/// Checks that every feature index in `layout` exists in a `state_dim` state.
pub fn check_layout(layout: &ParameterLayout, state_dim: usize, action_dim: usize) -> Result<()> {
    if layout.actions.len() != action_dim {
        return Err(Error::structure(format!(
            "layout describes {} actions, system has {action_dim}",
            layout.actions.len()
        )));
    }
    for (a, act) in layout.actions.iter().enumerate() {
        if act.rules == 0 {
            return Err(Error::structure(format!("action {a} needs at least one rule")));
        }
        if let Some(f) = act.features.iter().find(|f| **f >= state_dim) {
            return Err(Error::structure(format!("feature {f} out of range for dimension {state_dim}")));
        }
    }
    Ok(())
}

/// Searches the genome box of `layout` for the policy with the best fitness.
pub fn fpsrl_train<F, M>(
    layout: &ParameterLayout,
    evaluator: &Evaluator<F, M>,
    context: &PolicyContext<F>,
    settings: &FpsrlSettings<F>,
) -> Result<FpsrlResult<F>>
where
    F: Scalar,
    M: SystemModel<F>,
{
    check_layout(layout, evaluator.state_dim(), context.action_dim())?;
    let mut cfg = SwarmConfig::new(layout.bounds(&settings.search), settings.swarm_size, settings.iterations, settings.seed);
    cfg.topology = settings.topology;
    let objective = |x: &[F]| -> F {
        match decode_values(layout, x, &context.bounds, context.normalizer.as_ref(), settings.widths) {
            Ok(policy) => evaluator.score_fuzzy(&policy),
            Err(_) => F::neg_infinity(),
        }
    };
    let result = pso_maximize(objective, cfg)?;
    let policy = decode_values(
        layout,
        &result.best,
        &context.bounds,
        context.normalizer.as_ref(),
        settings.widths,
    )?;
    Ok(FpsrlResult {
        policy,
        fitness: result.best_fitness,
        evaluations: result.evaluations,
        history: result.history,
    })
}
