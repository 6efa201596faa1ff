//! TOML experiment description. Every key has a default; the defaults are
//! the desk-scale cart-pole settings.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gp::{GpConfig, GpRatios};
use crate::pso::Topology;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub env: EnvSection,
    pub dataset: DatasetSection,
    pub model: ModelSection,
    pub fitness: FitnessSection,
    pub fpsrl: FpsrlSection,
    pub fgprl: FgprlSection,
    pub feature_selection: FeatureSelectionSection,
    pub local_search: LocalSearchSection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Cartpole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub name: EnvKind,
    /// Random-walk channels appended to the state.
    pub irrelevant: usize,
    /// Noisy copies of true features appended after the irrelevant channels.
    pub redundant: usize,
    pub distractor_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub trajectories: usize,
    pub length: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Exact,
    Knn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessSection {
    pub horizon: usize,
    pub discount: f64,
    pub start_states: usize,
    /// Start states for the final test on the true system.
    pub test_states: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Ring,
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpsrlSection {
    pub rules: usize,
    /// Input features of every rule; empty means all, or the ranking's
    /// first `n_select` when `use_ranking` is set.
    pub features: Vec<usize>,
    pub use_ranking: bool,
    pub swarm_size: usize,
    pub iterations: usize,
    pub topology: TopologyKind,
    pub radius: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FgprlSection {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover: f64,
    pub reproduction: f64,
    pub mutation: f64,
    pub random: f64,
    pub elite_fraction: f64,
    pub elite_cap: usize,
    pub elite_copies: usize,
    pub max_complexity: usize,
    pub max_rules: usize,
    /// Evaluation cap for the evolutionary run; 0 disables it.
    pub max_evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSelectionSection {
    pub horizon: usize,
    pub swarm_size: usize,
    pub iterations: usize,
    /// States planned; 0 plans every dataset state.
    pub max_states: usize,
    pub bins: usize,
    /// Features ranked per action; 0 ranks all.
    pub n_select: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSearchSection {
    pub enabled: bool,
    pub swarm_size: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Re-evaluate final policies on the true system.
    pub real_evaluation: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            env: EnvSection::default(),
            dataset: DatasetSection::default(),
            model: ModelSection::default(),
            fitness: FitnessSection::default(),
            fpsrl: FpsrlSection::default(),
            fgprl: FgprlSection::default(),
            feature_selection: FeatureSelectionSection::default(),
            local_search: LocalSearchSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            name: EnvKind::Cartpole,
            irrelevant: 0,
            redundant: 0,
            distractor_seed: 0,
        }
    }
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            trajectories: 100,
            length: 100,
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Exact,
            k: crate::model::DEFAULT_K,
        }
    }
}

impl Default for FitnessSection {
    fn default() -> Self {
        Self {
            horizon: 300,
            discount: 0.994,
            start_states: 20,
            test_states: 100,
        }
    }
}

impl Default for FpsrlSection {
    fn default() -> Self {
        Self {
            rules: 4,
            features: Vec::new(),
            use_ranking: false,
            swarm_size: 200,
            iterations: 1000,
            topology: TopologyKind::Global,
            radius: 2,
        }
    }
}

impl Default for FgprlSection {
    fn default() -> Self {
        let r = GpRatios::default();
        let gp = GpConfig::<f64>::new(200, 0, 0);
        Self {
            population: 200,
            generations: 1000,
            tournament_size: gp.tournament_size,
            crossover: r.crossover,
            reproduction: r.reproduction,
            mutation: r.mutation,
            random: r.random,
            elite_fraction: gp.elite_fraction,
            elite_cap: gp.elite_cap,
            elite_copies: gp.elite_copies,
            max_complexity: gp.max_complexity,
            max_rules: gp.max_rules,
            max_evaluations: 200_000,
        }
    }
}

impl Default for FeatureSelectionSection {
    fn default() -> Self {
        Self {
            horizon: 50,
            swarm_size: 50,
            iterations: 50,
            max_states: 2000,
            bins: 16,
            n_select: 0,
        }
    }
}

impl Default for LocalSearchSection {
    fn default() -> Self {
        Self {
            enabled: true,
            swarm_size: 50,
            iterations: 200,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { real_evaluation: true }
    }
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::config(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

impl FpsrlSection {
    pub fn topology(&self) -> Topology {
        match self.topology {
            TopologyKind::Global => Topology::Global,
            TopologyKind::Ring => Topology::Ring { radius: self.radius },
        }
    }
}

impl FgprlSection {
    pub fn gp_config(&self, seed: u64) -> GpConfig<f64> {
        let mut cfg = GpConfig::new(self.population, self.generations, seed);
        cfg.tournament_size = self.tournament_size;
        cfg.ratios = GpRatios {
            crossover: self.crossover,
            reproduction: self.reproduction,
            mutation: self.mutation,
            random: self.random,
        };
        cfg.elite_fraction = self.elite_fraction;
        cfg.elite_cap = self.elite_cap;
        cfg.elite_copies = self.elite_copies;
        cfg.max_complexity = self.max_complexity;
        cfg.max_rules = self.max_rules;
        cfg.max_evaluations = (self.max_evaluations > 0).then_some(self.max_evaluations);
        cfg
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn state_dim(&self) -> usize {
        4 + self.env.irrelevant + self.env.redundant
    }

    pub fn validate(&self) -> Result<()> {
        positive("dataset.trajectories", self.dataset.trajectories)?;
        positive("dataset.length", self.dataset.length)?;
        if self.model.kind == ModelKind::Knn {
            positive("model.k", self.model.k)?;
            if self.model.k > self.dataset.trajectories * self.dataset.length {
                return Err(Error::config("model.k", "exceeds the number of transitions"));
            }
        }
        if self.fitness.horizon < 2 {
            return Err(Error::config("fitness.horizon", "must be greater than 1"));
        }
        if !(0.0..=1.0).contains(&self.fitness.discount) {
            return Err(Error::config("fitness.discount", "must lie in [0, 1]"));
        }
        positive("fitness.start_states", self.fitness.start_states)?;
        positive("fitness.test_states", self.fitness.test_states)?;

        let dim = self.state_dim();
        positive("fpsrl.rules", self.fpsrl.rules)?;
        if self.fpsrl.swarm_size < 2 {
            return Err(Error::config("fpsrl.swarm_size", "at least 2 particles required"));
        }
        if let Some(f) = self.fpsrl.features.iter().find(|f| **f >= dim) {
            return Err(Error::config("fpsrl.features", format!("feature {f} out of range for dimension {dim}")));
        }
        let mut sorted = self.fpsrl.features.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("fpsrl.features", "duplicate feature"));
        }
        if self.fpsrl.topology == TopologyKind::Ring {
            positive("fpsrl.radius", self.fpsrl.radius)?;
        }

        self.fgprl.gp_config(0).validate()?;

        let fs = &self.feature_selection;
        positive("feature_selection.horizon", fs.horizon)?;
        if fs.swarm_size < 2 {
            return Err(Error::config("feature_selection.swarm_size", "at least 2 particles required"));
        }
        if fs.bins < 2 {
            return Err(Error::config("feature_selection.bins", "at least 2 bins required"));
        }
        if fs.n_select > dim {
            return Err(Error::config("feature_selection.n_select", format!("must not exceed {dim}")));
        }
        if self.fpsrl.use_ranking {
            positive("feature_selection.n_select", fs.n_select)?;
            if !self.fpsrl.features.is_empty() {
                return Err(Error::config("fpsrl.features", "must be empty when use_ranking is set"));
            }
        }
        if self.local_search.enabled && self.local_search.swarm_size < 2 {
            return Err(Error::config("local_search.swarm_size", "at least 2 particles required"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring the seed.
    pub fn hash(&self) -> String {
        let mut unseeded = self.clone();
        unseeded.seed = 0;
        let bytes = serde_json::to_vec(&unseeded).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.fitness.horizon, 300);
        assert_eq!(cfg.fpsrl.swarm_size * cfg.fpsrl.iterations, 200_000);
    }

    #[test]
    fn toml_roundtrip_and_partial_sections() {
        let cfg = ExperimentConfig::from_toml("seed = 4\n[fpsrl]\nrules = 2\ntopology = \"ring\"\n").unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.fpsrl.rules, 2);
        assert_eq!(cfg.fpsrl.topology(), Topology::Ring { radius: 2 });
        assert_eq!(cfg.fpsrl.iterations, 1000);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn validation_names_the_field() {
        let field = |text: &str| match ExperimentConfig::from_toml(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(field("[fgprl]\ncrossover = 0.5\n"), "fgprl.ratios");
        assert_eq!(field("[fitness]\ndiscount = 1.5\n"), "fitness.discount");
        assert_eq!(field("[fpsrl]\nfeatures = [0, 9]\n"), "fpsrl.features");
        assert_eq!(field("[model]\nkind = \"knn\"\nk = 0\n"), "model.k");
        assert!(matches!(ExperimentConfig::from_toml("[fpsrl]\nbogus = 1\n"), Err(Error::Toml(m)) if m.contains("bogus")));
    }

    #[test]
    fn hash_ignores_seed_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed = 99;
        assert_eq!(a.hash(), b.hash());
        b.fpsrl.rules = 3;
        assert_ne!(a.hash(), b.hash());
    }
}
