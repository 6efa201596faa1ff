//! The generational loop.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::archive::ParetoArchive;
use super::operators::{crossover, gaussian_mutate, random_tree, tree_correction, TreeLimits};
use super::tree::PolicyTree;
use crate::error::{Error, Result};
use crate::fuzzy::{PolicyContext, SearchBox};
use crate::model::SystemModel;
use crate::rng::{stream, SeededRng};
use crate::rollout::Evaluator;
use crate::scalar::Scalar;

/// Shares of each generation filled by each operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpRatios {
    pub crossover: f64,
    pub reproduction: f64,
    pub mutation: f64,
    pub random: f64,
}

impl Default for GpRatios {
    fn default() -> Self {
        Self {
            crossover: 0.45,
            reproduction: 0.05,
            mutation: 0.10,
            random: 0.40,
        }
    }
}

/// Individuals per operator for one generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCounts {
    pub crossover: usize,
    pub reproduction: usize,
    pub mutation: usize,
    pub random: usize,
}

impl GpRatios {
    /// Rounded shares; whatever rounding leaves over goes to random individuals.
    pub fn slots(&self, population: usize) -> SlotCounts {
        let n = |r: f64| (r * population as f64).round() as usize;
        let crossover = n(self.crossover).min(population);
        let reproduction = n(self.reproduction).min(population - crossover);
        let mutation = n(self.mutation).min(population - crossover - reproduction);
        SlotCounts {
            crossover,
            reproduction,
            mutation,
            random: population - crossover - reproduction - mutation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig<F> {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub ratios: GpRatios,
    /// Share of each complexity level taken as elites (at least one per level).
    pub elite_fraction: f64,
    pub elite_cap: usize,
    pub elite_copies: usize,
    pub max_complexity: usize,
    /// Upper end of the rule-count ramp for new individuals.
    pub max_rules: usize,
    /// Stops before a generation that could push the evaluation count past this.
    pub max_evaluations: Option<u64>,
    pub search: SearchBox<F>,
    pub seed: u64,
}

impl<F: Scalar> GpConfig<F> {
    pub fn new(population: usize, generations: usize, seed: u64) -> Self {
        Self {
            population,
            generations,
            tournament_size: 4,
            ratios: GpRatios::default(),
            elite_fraction: 0.05,
            elite_cap: 20,
            elite_copies: 5,
            max_complexity: 400,
            max_rules: 4,
            max_evaluations: None,
            search: SearchBox::default(),
            seed,
        }
    }

    /// Evaluations a run performs, given how many elites each of its
    /// generations had.
    ///
    /// Reproductions reuse their parent's fitness and cost nothing.
    pub fn budget(&self, elites_per_generation: &[usize]) -> u64 {
        let generations = elites_per_generation.len() as u64;
        let elites: usize = elites_per_generation.iter().sum();
        self.population as u64 + generations * self.offspring_cost() + (elites * self.elite_copies) as u64
    }

    fn offspring_cost(&self) -> u64 {
        let s = self.ratios.slots(self.population);
        (s.crossover + s.mutation + s.random) as u64
    }

    /// Most evaluations one generation can spend.
    pub fn generation_cost_bound(&self) -> u64 {
        self.offspring_cost() + (self.elite_cap * self.elite_copies) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.ratios;
        let parts = [r.crossover, r.reproduction, r.mutation, r.random];
        if parts.iter().any(|p| !(*p >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("fgprl.ratios", "must be nonnegative and sum to 1"));
        }
        if self.tournament_size == 0 {
            return Err(Error::config("fgprl.tournament_size", "must be at least 1"));
        }
        if self.population < self.tournament_size.max(2) {
            return Err(Error::config("fgprl.population", "must be at least the tournament size and 2"));
        }
        if !(self.elite_fraction >= 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::config("fgprl.elite_fraction", "must lie in [0, 1]"));
        }
        if self.max_rules == 0 {
            return Err(Error::config("fgprl.max_rules", "must be at least 1"));
        }
        if self.max_complexity < 12 {
            return Err(Error::config("fgprl.max_complexity", "must admit the minimal tree (12)"));
        }
        Ok(())
    }
}

/// Fitness evaluations spent, by origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpTally {
    pub initial: u64,
    pub crossover: u64,
    pub mutation: u64,
    pub random: u64,
    pub elite: u64,
}

impl GpTally {
    pub fn total(&self) -> u64 {
        self.initial + self.crossover + self.mutation + self.random + self.elite
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpResult<F> {
    pub archive: ParetoArchive<F>,
    /// Archive `(complexity, fitness)` levels after each generation; entry 0
    /// is the initial population.
    pub history: Vec<Vec<(usize, F)>>,
    pub tally: GpTally,
    /// Elites mutated in each generation after the first.
    pub elites_per_generation: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Origin {
    Initial,
    Crossover,
    Mutation,
    Random,
    Elite,
}

struct Candidate<F> {
    tree: PolicyTree<F>,
    origin: Origin,
}

/// Fitness of a tree under `evaluator`; failures give negative infinity.
pub fn tree_fitness<F: Scalar, M: SystemModel<F>>(
    tree: &PolicyTree<F>,
    evaluator: &Evaluator<F, M>,
    context: &PolicyContext<F>,
) -> F {
    match tree.to_policy(context) {
        Ok(p) => evaluator.score_fuzzy(&p),
        Err(_) => F::neg_infinity(),
    }
}

struct Engine<'a, F, M> {
    cfg: &'a GpConfig<F>,
    evaluator: &'a Evaluator<F, M>,
    context: &'a PolicyContext<F>,
    state_dim: usize,
    rng: SeededRng,
    tally: GpTally,
}

impl<F: Scalar, M: SystemModel<F>> Engine<'_, F, M> {
    fn fresh(&mut self) -> PolicyTree<F> {
        let limits = TreeLimits {
            max_rules: self.rng.random_range(1..=self.cfg.max_rules),
            max_dims: self.rng.random_range(0..=self.state_dim),
        };
        random_tree(&mut self.rng, limits, &self.cfg.search, self.state_dim, self.context.action_dim())
    }

    fn tournament<'p>(&mut self, pop: &'p [PolicyTree<F>]) -> &'p PolicyTree<F> {
        let mut best = &pop[self.rng.random_range(0..pop.len())];
        for _ in 1..self.cfg.tournament_size {
            let c = &pop[self.rng.random_range(0..pop.len())];
            if fit(c) > fit(best) {
                best = c;
            }
        }
        best
    }

    /// Corrects and caps a variation product.
    fn admit(&mut self, tree: PolicyTree<F>) -> PolicyTree<F> {
        let tree = tree_correction(&tree);
        if tree.complexity() > self.cfg.max_complexity {
            self.fresh()
        } else {
            tree
        }
    }

    /// Scores every candidate that has no cached fitness.
    fn evaluate(&mut self, batch: &mut [Candidate<F>]) {
        let (evaluator, context) = (self.evaluator, self.context);
        batch.par_iter_mut().filter(|c| c.tree.fitness.is_none()).for_each(|c| {
            c.tree.fitness = Some(tree_fitness(&c.tree, evaluator, context));
        });
    }
}

fn fit<F: Scalar>(t: &PolicyTree<F>) -> F {
    t.fitness.unwrap_or(F::neg_infinity())
}

/// Evolves fuzzy-policy trees and returns the Pareto archive of everything
/// evaluated.
pub fn evolve<F, M>(evaluator: &Evaluator<F, M>, context: &PolicyContext<F>, cfg: &GpConfig<F>) -> Result<GpResult<F>>
where
    F: Scalar,
    M: SystemModel<F>,
{
    cfg.validate()?;
    let state_dim = evaluator.state_dim();
    if let Some(n) = &context.normalizer {
        if n.dim() != state_dim {
            return Err(Error::structure("normalizer dimension differs from the model state"));
        }
    }
    let mut engine = Engine {
        cfg,
        evaluator,
        context,
        state_dim,
        rng: stream(cfg.seed, &[0x6E_0E]),
        tally: GpTally::default(),
    };
    let mut archive = ParetoArchive::new();
    let mut history = Vec::with_capacity(cfg.generations + 1);

    let mut batch: Vec<Candidate<F>> = (0..cfg.population)
        .map(|_| Candidate {
            tree: engine.fresh(),
            origin: Origin::Initial,
        })
        .collect();
    let slots = cfg.ratios.slots(cfg.population);
    let mut elite_groups: Vec<EliteGroup<F>> = Vec::new();
    let mut elites_per_generation = Vec::with_capacity(cfg.generations);

    for generation in 0..=cfg.generations {
        if generation > 0 {
            if let Some(cap) = cfg.max_evaluations {
                if engine.tally.total() + cfg.generation_cost_bound() > cap {
                    break;
                }
            }
            let (next, groups) = breed(&mut engine, &batch, slots);
            batch = next;
            elites_per_generation.push(groups.len());
            elite_groups = groups;
        }
        let pending: Vec<bool> = batch.iter().map(|c| c.tree.fitness.is_none()).collect();
        engine.evaluate(&mut batch);
        for (c, new) in batch.iter().zip(&pending) {
            if *new {
                let slot = match c.origin {
                    Origin::Initial => &mut engine.tally.initial,
                    Origin::Crossover => &mut engine.tally.crossover,
                    Origin::Mutation => &mut engine.tally.mutation,
                    Origin::Random => &mut engine.tally.random,
                    Origin::Elite => &mut engine.tally.elite,
                };
                *slot += 1;
                archive.offer(&c.tree, fit(&c.tree), generation);
            }
        }
        batch = admit_elites(batch, &elite_groups);
        history.push(archive.snapshot());
    }

    Ok(GpResult {
        archive,
        history,
        tally: engine.tally,
        elites_per_generation,
    })
}

/// Mutated copies of one elite: `len` candidates starting at `start`.
struct EliteGroup<F> {
    start: usize,
    len: usize,
    original: F,
}

/// Builds the next generation, followed by mutated copies of the elites of `batch`.
fn breed<F: Scalar, M: SystemModel<F>>(
    engine: &mut Engine<'_, F, M>,
    batch: &[Candidate<F>],
    slots: SlotCounts,
) -> (Vec<Candidate<F>>, Vec<EliteGroup<F>>) {
    let pop: Vec<PolicyTree<F>> = batch.iter().map(|c| c.tree.clone()).collect();
    let mut next = Vec::with_capacity(pop.len() + engine.cfg.elite_cap * engine.cfg.elite_copies);
    let push = |next: &mut Vec<Candidate<F>>, tree, origin| next.push(Candidate { tree, origin });

    let mut made = 0;
    while made < slots.crossover {
        let a = engine.tournament(&pop).clone();
        let b = engine.tournament(&pop).clone();
        let (x, y) = crossover(&a, &b, &mut engine.rng);
        for child in [x, y] {
            if made < slots.crossover {
                // copies from a failed cut are scored like any other offspring
                let mut child = engine.admit(child);
                child.fitness = None;
                push(&mut next, child, Origin::Crossover);
                made += 1;
            }
        }
    }
    for _ in 0..slots.reproduction {
        let t = engine.tournament(&pop).clone();
        push(&mut next, t, Origin::Crossover);
    }
    for _ in 0..slots.mutation {
        let t = gaussian_mutate(engine.tournament(&pop), &mut engine.rng);
        let t = engine.admit(t);
        push(&mut next, t, Origin::Mutation);
    }
    for _ in 0..slots.random {
        let t = engine.fresh();
        push(&mut next, t, Origin::Random);
    }

    let mut groups = Vec::new();
    for original in elites(&pop, engine.cfg) {
        let start = next.len();
        for _ in 0..engine.cfg.elite_copies {
            let mut copy = gaussian_mutate(original, &mut engine.rng);
            copy.fitness = None;
            push(&mut next, copy, Origin::Elite);
        }
        groups.push(EliteGroup {
            start,
            len: engine.cfg.elite_copies,
            original: fit(original),
        });
    }
    (next, groups)
}

/// Best members of each complexity level, at most `elite_cap` overall.
fn elites<'p, F: Scalar>(pop: &'p [PolicyTree<F>], cfg: &GpConfig<F>) -> Vec<&'p PolicyTree<F>> {
    if cfg.elite_fraction == 0.0 || cfg.elite_copies == 0 {
        return Vec::new();
    }
    let mut levels: BTreeMap<usize, Vec<&PolicyTree<F>>> = BTreeMap::new();
    for t in pop.iter().filter(|t| fit(t).is_finite()) {
        levels.entry(t.complexity()).or_default().push(t);
    }
    let mut out: Vec<&PolicyTree<F>> = Vec::new();
    for members in levels.values_mut() {
        members.sort_by(|a, b| fit(*b).partial_cmp(&fit(*a)).unwrap());
        let k = ((cfg.elite_fraction * members.len() as f64).ceil() as usize).max(1);
        out.extend(members.iter().take(k));
    }
    // stable: lower complexity wins among equal fitness
    out.sort_by(|a, b| fit(*b).partial_cmp(&fit(*a)).unwrap());
    out.truncate(cfg.elite_cap);
    out
}

/// Keeps the best copy of each elite if it beats the original; drops the rest.
fn admit_elites<F: Scalar>(batch: Vec<Candidate<F>>, groups: &[EliteGroup<F>]) -> Vec<Candidate<F>> {
    let mut keep = vec![true; batch.len()];
    for g in groups {
        let range = g.start..g.start + g.len;
        keep[range.clone()].iter_mut().for_each(|k| *k = false);
        let best = range
            .clone()
            .reduce(|b, i| if fit(&batch[i].tree) > fit(&batch[b].tree) { i } else { b });
        if let Some(b) = best {
            if fit(&batch[b].tree) > g.original {
                keep[b] = true;
            }
        }
    }
    batch.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect()
}
