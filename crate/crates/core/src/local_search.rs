//! Swarm tuning of the constants of evolved trees with their structure frozen.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fuzzy::{PolicyContext, SearchBox};
use crate::gp::{tree_fitness, FloatRole, ParetoArchive, PolicyTree};
use crate::model::SystemModel;
use crate::pso::{pso_maximize, SwarmConfig, Topology};
use crate::rng::derive;
use crate::rollout::Evaluator;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchSettings<F> {
    pub swarm_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub search: SearchBox<F>,
    pub topology: Topology,
}

impl<F: Scalar> LocalSearchSettings<F> {
    pub fn new(swarm_size: usize, iterations: usize, seed: u64) -> Self {
        Self {
            swarm_size,
            iterations,
            seed,
            search: SearchBox::default(),
            topology: Topology::Ring { radius: 2 },
        }
    }

    /// Evaluations spent on one tree whose fitness is already known.
    pub fn budget(&self) -> u64 {
        (self.swarm_size * self.iterations) as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tuned<F> {
    pub tree: PolicyTree<F>,
    pub fitness: F,
    pub improved: bool,
}

fn role_range<F: Scalar>(search: &SearchBox<F>, role: FloatRole) -> (F, F) {
    match role {
        FloatRole::Alpha => search.alpha,
        FloatRole::Consequent => search.consequent,
        FloatRole::Center => search.center,
        FloatRole::Width => search.width,
    }
}

/// Searches the constants of `tree` for a strictly better policy.
///
/// `key` separates the random streams of trees tuned in the same run. The
/// input's cached fitness is trusted; without one, the tree is scored first.
pub fn tune_terminals<F, M>(
    tree: &PolicyTree<F>,
    evaluator: &Evaluator<F, M>,
    context: &PolicyContext<F>,
    settings: &LocalSearchSettings<F>,
    key: u64,
) -> Result<Tuned<F>>
where
    F: Scalar,
    M: SystemModel<F>,
{
    let values = tree.constants();
    if values.is_empty() || settings.iterations == 0 {
        return Ok(Tuned {
            tree: tree.clone(),
            fitness: tree.fitness.unwrap_or(F::neg_infinity()),
            improved: false,
        });
    }
    let base = match tree.fitness {
        Some(f) => f,
        None => tree_fitness(tree, evaluator, context),
    };
    let bounds: Vec<(F, F)> = values
        .iter()
        .zip(tree.float_roles())
        .map(|(v, role)| {
            let (lo, hi) = role_range(&settings.search, role);
            (lo.min(*v), hi.max(*v))
        })
        .collect();
    let mut cfg = SwarmConfig::new(bounds, settings.swarm_size, settings.iterations, derive(settings.seed, &[key]));
    cfg.topology = settings.topology;
    cfg.initial = vec![values];
    let objective = |x: &[F]| {
        let mut t = tree.clone();
        t.set_constants(x);
        tree_fitness(&t, evaluator, context)
    };
    let result = pso_maximize(objective, cfg)?;
    if result.best_fitness > base {
        let mut out = tree.clone();
        out.set_constants(&result.best);
        out.fitness = Some(result.best_fitness);
        Ok(Tuned {
            tree: out,
            fitness: result.best_fitness,
            improved: true,
        })
    } else {
        let mut out = tree.clone();
        out.fitness = Some(base);
        Ok(Tuned {
            tree: out,
            fitness: base,
            improved: false,
        })
    }
}

/// Tunes every front member and returns the archive of the results.
///
/// Members whose tuning fails are kept as they were.
pub fn tune_front<F, M>(
    archive: &ParetoArchive<F>,
    evaluator: &Evaluator<F, M>,
    context: &PolicyContext<F>,
    settings: &LocalSearchSettings<F>,
) -> ParetoArchive<F>
where
    F: Scalar,
    M: SystemModel<F>,
{
    let front = archive.front();
    let tuned: Vec<(usize, F, PolicyTree<F>)> = front
        .par_iter()
        .map(|e| {
            let mut original = e.tree.clone();
            original.fitness = Some(e.fitness);
            match tune_terminals(&original, evaluator, context, settings, e.complexity as u64) {
                Ok(t) => (e.generation_found, t.fitness, t.tree),
                Err(_) => (e.generation_found, e.fitness, original),
            }
        })
        .collect();
    let mut out = ParetoArchive::new();
    for (generation, fitness, tree) in &tuned {
        out.offer(tree, *fitness, *generation);
    }
    out
}
