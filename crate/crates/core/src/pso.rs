//! Particle swarm maximization over a bounded box.
//!
//! Inertia-weight velocity update with a ring (lbest) or global topology.
//! A personal best is replaced only on strict improvement. All randomness
//! for particle `i` at iteration `p` comes from a stream keyed by
//! `(seed, i, p)`, and objective values are computed in parallel, so the run
//! is identical for any worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Global,
    Ring { radius: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig<F> {
    pub swarm_size: usize,
    /// Evaluation rounds; the first one scores the initial positions.
    pub iterations: usize,
    pub inertia: F,
    pub cognitive: F,
    pub social: F,
    pub topology: Topology,
    pub bounds: Vec<(F, F)>,
    pub seed: u64,
    /// Positions assigned to the first particles instead of random draws.
    #[serde(default)]
    pub initial: Vec<Vec<F>>,
}

impl<F: Scalar> SwarmConfig<F> {
    pub fn new(bounds: Vec<(F, F)>, swarm_size: usize, iterations: usize, seed: u64) -> Self {
        Self {
            swarm_size,
            iterations,
            inertia: F::of(0.7298),
            cognitive: F::of(1.49618),
            social: F::of(1.49618),
            topology: Topology::Ring { radius: 2 },
            bounds,
            seed,
            initial: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::config("swarm_size", "at least 2 particles required"));
        }
        for (d, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config("bounds", format!("dimension {d} needs finite lo < hi")));
            }
        }
        if self.initial.len() > self.swarm_size {
            return Err(Error::config("initial", "more seeded positions than particles"));
        }
        if self.initial.iter().any(|p| p.len() != self.dim()) {
            return Err(Error::config("initial", "seeded position has the wrong dimension"));
        }
        Ok(())
    }

    /// Total objective evaluations a full run performs.
    pub fn budget(&self) -> u64 {
        (self.swarm_size * self.iterations) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle<F> {
    pub position: Vec<F>,
    pub velocity: Vec<F>,
    pub fitness: F,
    pub best_position: Vec<F>,
    pub best_fitness: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmResult<F> {
    pub best: Vec<F>,
    pub best_fitness: F,
    /// Global best fitness after each iteration.
    pub history: Vec<F>,
    pub evaluations: u64,
}

/// Swarm state that can be advanced one iteration at a time.
pub struct Swarm<F> {
    cfg: SwarmConfig<F>,
    particles: Vec<Particle<F>>,
    iteration: usize,
    global: usize,
    evaluations: u64,
}

fn sanitize<F: Scalar>(v: F) -> F {
    if v.is_finite() {
        v
    } else {
        F::neg_infinity()
    }
}

impl<F: Scalar> Swarm<F> {
    pub fn new(cfg: SwarmConfig<F>) -> Result<Self> {
        cfg.validate()?;
        let particles = (0..cfg.swarm_size)
            .map(|i| {
                let position: Vec<F> = match cfg.initial.get(i) {
                    Some(p) => p
                        .iter()
                        .zip(&cfg.bounds)
                        .map(|(v, (lo, hi))| v.max(*lo).min(*hi))
                        .collect(),
                    None => {
                        let mut rng = stream(cfg.seed, &[i as u64, 0]);
                        cfg.bounds.iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect()
                    }
                };
                Particle {
                    velocity: vec![F::zero(); position.len()],
                    best_position: position.clone(),
                    position,
                    fitness: F::neg_infinity(),
                    best_fitness: F::neg_infinity(),
                }
            })
            .collect();
        Ok(Self {
            cfg,
            particles,
            iteration: 0,
            global: 0,
            evaluations: 0,
        })
    }

    pub fn particles(&self) -> &[Particle<F>] {
        &self.particles
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn best(&self) -> &Particle<F> {
        &self.particles[self.global]
    }

    fn neighborhood_best(&self, i: usize) -> usize {
        match self.cfg.topology {
            Topology::Global => self.global,
            Topology::Ring { radius } => {
                let n = self.particles.len();
                let r = radius.min(n / 2);
                let mut best = i;
                for off in 1..=r {
                    for j in [(i + n - off) % n, (i + off) % n] {
                        if self.particles[j].best_fitness > self.particles[best].best_fitness {
                            best = j;
                        }
                    }
                }
                best
            }
        }
    }

    fn move_particles(&mut self) {
        let attractors: Vec<Vec<F>> = (0..self.particles.len())
            .map(|i| self.particles[self.neighborhood_best(i)].best_position.clone())
            .collect();
        let cfg = &self.cfg;
        let iteration = self.iteration as u64;
        let half = F::of(0.5);
        for (i, (p, social)) in self.particles.iter_mut().zip(attractors).enumerate() {
            let mut rng = stream(cfg.seed, &[i as u64, iteration]);
            for d in 0..p.position.len() {
                let (lo, hi) = cfg.bounds[d];
                let vmax = half * (hi - lo);
                let r1: F = rng.random_range(F::zero()..F::one());
                let r2: F = rng.random_range(F::zero()..F::one());
                let x = p.position[d];
                let v = cfg.inertia * p.velocity[d]
                    + cfg.cognitive * r1 * (p.best_position[d] - x)
                    + cfg.social * r2 * (social[d] - x);
                let v = v.max(-vmax).min(vmax);
                let nx = x + v;
                if nx < lo {
                    p.position[d] = lo;
                    p.velocity[d] = F::zero();
                } else if nx > hi {
                    p.position[d] = hi;
                    p.velocity[d] = F::zero();
                } else {
                    p.position[d] = nx;
                    p.velocity[d] = v;
                }
            }
        }
    }

    /// Runs one iteration: moves the particles (except on the first call),
    /// evaluates them and updates personal and global bests.
    pub fn step<O>(&mut self, objective: &O)
    where
        O: Fn(&[F]) -> F + Sync,
    {
        if self.iteration > 0 {
            self.move_particles();
        }
        let scores: Vec<F> = self
            .particles
            .par_iter()
            .map(|p| sanitize(objective(&p.position)))
            .collect();
        self.evaluations += scores.len() as u64;
        for (p, f) in self.particles.iter_mut().zip(scores) {
            p.fitness = f;
            if self.iteration == 0 || f > p.best_fitness {
                p.best_fitness = f;
                p.best_position.clone_from(&p.position);
            }
        }
        let mut g = 0;
        for (i, p) in self.particles.iter().enumerate() {
            if p.best_fitness > self.particles[g].best_fitness {
                g = i;
            }
        }
        self.global = g;
        self.iteration += 1;
    }
}

/// Maximizes `objective` over `cfg.bounds`.
pub fn pso_maximize<F, O>(objective: O, cfg: SwarmConfig<F>) -> Result<SwarmResult<F>>
where
    F: Scalar,
    O: Fn(&[F]) -> F + Sync,
{
    let iterations = cfg.iterations;
    let mut swarm = Swarm::new(cfg)?;
    let mut history = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        swarm.step(&objective);
        history.push(swarm.best().best_fitness);
    }
    let best = swarm.best();
    Ok(SwarmResult {
        best: best.best_position.clone(),
        best_fitness: best.best_fitness,
        history,
        evaluations: swarm.evaluations(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        -x.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn finds_sphere_optimum() {
        let cfg = SwarmConfig::new(vec![(-1.0, 1.0); 5], 50, 200, 3);
        let res = pso_maximize(sphere, cfg).unwrap();
        assert!(res.best_fitness >= -1e-3, "{}", res.best_fitness);
        assert_eq!(res.evaluations, 10_000);
        assert_eq!(res.history.len(), 200);
    }

    #[test]
    fn single_iteration_keeps_initial_positions() {
        let cfg = SwarmConfig::new(vec![(-1.0, 1.0); 3], 10, 1, 5);
        let mut swarm = Swarm::new(cfg).unwrap();
        let initial: Vec<Vec<f64>> = swarm.particles().iter().map(|p| p.position.clone()).collect();
        swarm.step(&sphere);
        for (p, x0) in swarm.particles().iter().zip(&initial) {
            assert_eq!(&p.best_position, x0);
            assert_eq!(p.best_fitness, sphere(x0));
        }
    }

    #[test]
    fn constant_objective_never_replaces_personal_bests() {
        let cfg = SwarmConfig::new(vec![(-2.0, 2.0); 4], 12, 1, 8);
        let mut swarm = Swarm::new(cfg).unwrap();
        swarm.step(&|_: &[f64]| 1.0);
        let firsts: Vec<Vec<f64>> = swarm.particles().iter().map(|p| p.best_position.clone()).collect();
        for _ in 0..20 {
            swarm.step(&|_: &[f64]| 1.0);
        }
        for (p, y) in swarm.particles().iter().zip(&firsts) {
            assert_eq!(&p.best_position, y);
        }
    }

    #[test]
    fn non_finite_scores_never_become_best() {
        let cfg = SwarmConfig::new(vec![(-1.0, 1.0); 2], 8, 30, 2);
        let res = pso_maximize(|x: &[f64]| if x[0] > 0.0 { f64::NAN } else { x[0] }, cfg).unwrap();
        assert!(res.best_fitness.is_finite());
        assert!(res.best[0] <= 0.0);
    }

    #[test]
    fn seeded_position_is_evaluated() {
        let mut cfg = SwarmConfig::new(vec![(-1.0, 1.0); 2], 4, 1, 2);
        cfg.initial = vec![vec![0.0, 0.0]];
        let res = pso_maximize(sphere, cfg).unwrap();
        assert_eq!(res.best, vec![0.0, 0.0]);
        assert_eq!(res.best_fitness, 0.0);
    }

    #[test]
    fn monotone_bounded_and_deterministic() {
        let make = || {
            let mut cfg = SwarmConfig::new(vec![(-3.0, 1.0), (0.0, 5.0), (-1.0, 1.0)], 15, 60, 77);
            cfg.topology = Topology::Global;
            cfg
        };
        let rastrigin = |x: &[f64]| -> f64 {
            -x.iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos() + 10.0)
                .sum::<f64>()
        };
        let mut swarm = Swarm::new(make()).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        let mut prev_global = f64::NEG_INFINITY;
        for _ in 0..60 {
            swarm.step(&rastrigin);
            let bests: Vec<f64> = swarm.particles().iter().map(|p| p.best_fitness).collect();
            if let Some(prev) = &prev {
                assert!(bests.iter().zip(prev).all(|(b, p)| b >= p));
            }
            for p in swarm.particles() {
                for (x, (lo, hi)) in p.position.iter().zip(&make().bounds) {
                    assert!(x >= lo && x <= hi);
                }
            }
            assert!(swarm.best().best_fitness >= prev_global);
            prev_global = swarm.best().best_fitness;
            prev = Some(bests);
        }
        let a = pso_maximize(rastrigin, make()).unwrap();
        let b = pso_maximize(rastrigin, make()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(Swarm::new(SwarmConfig::new(vec![(0.0, 1.0)], 1, 1, 0)).is_err());
        assert!(Swarm::new(SwarmConfig::new(vec![(1.0, 1.0)], 4, 1, 0)).is_err());
        assert!(Swarm::new(SwarmConfig::new(vec![(0.0, f64::INFINITY)], 4, 1, 0)).is_err());
    }

    #[test]
    fn zero_iterations_evaluates_nothing() {
        let res = pso_maximize(sphere, SwarmConfig::new(vec![(-1.0, 1.0)], 4, 0, 0)).unwrap();
        assert_eq!(res.evaluations, 0);
        assert!(res.history.is_empty());
    }
}
