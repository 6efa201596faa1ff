//! End-to-end runs driven by an [`ExperimentConfig`], writing a bundle of
//! result files into one output directory.
//!
//! Every artifact carries the config hash and the seed. Wall-clock times go
//! to `timing.json` only, so two runs with the same config and seed produce
//! byte-identical bundles apart from that file.

mod config;
mod report;

pub use config::*;
pub use report::*;

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dataset::{generate_dataset, DataPolicy, TransitionDataset};
use crate::env::{sample_start_states, CartPole, Environment, WithDistractors};
use crate::error::{Error, Result};
use crate::feature_selection::{optimal_pairs, rank_features, FeatureRanking, PsopSettings};
use crate::fpsrl::{fpsrl_train, FpsrlSettings};
use crate::fuzzy::{ActionLayout, FuzzyPolicy, ParameterLayout, PolicyContext, PolicyDocument, PolicyMetadata};
use crate::gp::{evolve, ParetoArchive, PolicyTree};
use crate::local_search::{tune_front, LocalSearchSettings};
use crate::model::{exact_model, knn_fit, ModelFingerprint, SystemModel};
use crate::rng::derive;
use crate::rollout::{EvaluationCounter, Evaluator, FitnessConfig};

pub type DynEnv = Box<dyn Environment<f64>>;
pub type DynModel = Box<dyn SystemModel<f64>>;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MODEL_FILE: &str = "model.json";
pub const RANKING_FILE: &str = "ranking.json";
pub const FPSRL_POLICY_FILE: &str = "fpsrl_policy.json";
pub const FPSRL_CURVE_FILE: &str = "fpsrl_curve.csv";
pub const FGPRL_PARETO_FILE: &str = "fgprl_pareto.jsonl";
pub const FGPRL_FRONT_FILE: &str = "fgprl_front.csv";
pub const FGPRL_CURVE_FILE: &str = "fgprl_curve.csv";
pub const TUNED_PARETO_FILE: &str = "tuned_pareto.jsonl";
pub const TUNED_FRONT_FILE: &str = "tuned_front.csv";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const BUDGET_FILE: &str = "budget.json";
pub const TIMING_FILE: &str = "timing.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const COMPARISON_FILE: &str = "comparison.csv";

/// Pipeline steps, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    GenData,
    FitModel,
    SelectFeatures,
    Fpsrl,
    Fgprl,
    Tune,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::FitModel => "fit-model",
            Stage::SelectFeatures => "select-features",
            Stage::Fpsrl => "fpsrl",
            Stage::Fgprl => "fgprl",
            Stage::Tune => "tune",
            Stage::Evaluate => "evaluate",
        }
    }

    fn key(self) -> u64 {
        self as u64 + 1
    }
}

/// One line of a Pareto JSON-lines file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoRecord {
    pub complexity: usize,
    pub fitness_model: f64,
    /// True-system fitness on the test start states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness_real: Option<f64>,
    pub generation_found: usize,
    pub policy: PolicyDocument<f64>,
    pub tree: PolicyTree<f64>,
    pub config_hash: String,
    pub seed: u64,
}

/// Model and true-system fitness of one final policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub method: String,
    pub complexity: usize,
    /// Model fitness on the training start states.
    pub fitness_model: f64,
    /// True-system fitness on the training start states.
    pub fitness_real_train: f64,
    /// `fitness_model - fitness_real_train`.
    pub gap: f64,
    /// True-system fitness on the separate test start states.
    pub fitness_test: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config_hash: String,
    pub seed: u64,
    pub model: ModelFingerprint,
    pub rows: Vec<EvaluationRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StageRecord {
    stage: Stage,
    status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// A configured run bound to an output directory.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    hash: String,
}

impl Experiment {
    /// `seed` overrides the config's seed when given.
    pub fn new(config: ExperimentConfig, seed: Option<u64>, out_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let out_dir = out_dir.into();
        fs::create_dir_all(&out_dir)?;
        Ok(Self {
            seed: seed.unwrap_or(config.seed),
            hash: config.hash(),
            config,
            out_dir,
        })
    }

    pub fn from_file(path: &Path, seed: Option<u64>, out_dir: impl Into<PathBuf>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::new(ExperimentConfig::from_toml(&text)?, seed, out_dir)
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    fn stage_seed(&self, stage: Stage) -> u64 {
        derive(self.seed, &[stage.key()])
    }

    pub fn env(&self) -> DynEnv {
        let e = &self.config.env;
        if e.irrelevant == 0 && e.redundant == 0 {
            Box::new(CartPole::new())
        } else {
            Box::new(WithDistractors::new(CartPole::new(), e.irrelevant, e.redundant, e.distractor_seed))
        }
    }

    fn generate_dataset(&self) -> Result<TransitionDataset<f64>> {
        let d = &self.config.dataset;
        generate_dataset(
            &self.env(),
            DataPolicy::Random,
            d.trajectories,
            d.length,
            &CartPole::dataset_region(),
            self.stage_seed(Stage::GenData),
        )
    }

    /// The run's dataset, read from the bundle when present and matching.
    pub fn dataset(&self) -> Result<TransitionDataset<f64>> {
        let path = self.path(DATASET_FILE);
        if path.exists() {
            let data = TransitionDataset::read_jsonl(BufReader::new(fs::File::open(&path)?))?;
            let d = &self.config.dataset;
            let m = &data.meta;
            if m.seed == self.stage_seed(Stage::GenData)
                && m.n_traj == d.trajectories
                && m.traj_len == d.length
                && m.env == self.env().name()
            {
                return Ok(data);
            }
        }
        self.gen_data()
    }

    pub fn model(&self, data: &TransitionDataset<f64>) -> Result<DynModel> {
        Ok(match self.config.model.kind {
            ModelKind::Exact => Box::new(exact_model(self.env())),
            ModelKind::Knn => Box::new(knn_fit(data, self.config.model.k, Some(self.env().action_bounds()))?),
        })
    }

    pub fn context(&self, data: &TransitionDataset<f64>) -> Result<PolicyContext<f64>> {
        Ok(PolicyContext::new(self.env().action_bounds(), Some(data.normalizer()?)))
    }

    pub fn start_states(&self) -> Vec<Vec<f64>> {
        sample_start_states(
            &self.env(),
            &CartPole::evaluation_region(),
            self.config.fitness.start_states,
            derive(self.seed, &[0x57A7]),
        )
    }

    pub fn test_states(&self) -> Vec<Vec<f64>> {
        sample_start_states(
            &self.env(),
            &CartPole::evaluation_region(),
            self.config.fitness.test_states,
            derive(self.seed, &[0x7E57]),
        )
    }

    pub fn evaluator(&self, model: DynModel, starts: Vec<Vec<f64>>) -> Result<Evaluator<f64, DynModel>> {
        let f = &self.config.fitness;
        Evaluator::new(model, FitnessConfig::new(f.horizon, f.discount, starts)?)
    }

    fn real_evaluator(&self, starts: Vec<Vec<f64>>) -> Result<Evaluator<f64, DynModel>> {
        self.evaluator(Box::new(exact_model(self.env())), starts)
    }

    fn metadata(&self, complexity: usize, fitness: f64) -> PolicyMetadata {
        PolicyMetadata {
            complexity: Some(complexity),
            fitness: Some(fitness),
            seed: Some(self.seed),
            config_hash: Some(self.hash.clone()),
        }
    }

    fn write(&self, file: &str, contents: &[u8]) -> Result<()> {
        let mut f = fs::File::create(self.path(file))?;
        f.write_all(contents)?;
        Ok(())
    }

    fn merge_json(&self, file: &str, key: &str, value: Value) -> Result<()> {
        let path = self.path(file);
        let mut map: Map<String, Value> = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => Map::new(),
        };
        map.insert("config_hash".into(), json!(self.hash));
        map.insert("seed".into(), json!(self.seed));
        map.insert(key.into(), value);
        self.write(file, serde_json::to_string_pretty(&map)?.as_bytes())
    }

    fn record_budget(&self, stage: Stage, value: Value) -> Result<()> {
        self.merge_json(BUDGET_FILE, stage.name(), value)
    }

    fn timed<T>(&self, stage: Stage, run: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = run()?;
        self.merge_json(TIMING_FILE, stage.name(), json!(t.elapsed().as_secs_f64()))?;
        Ok(out)
    }

    /// Records the dataset and writes it to the bundle.
    pub fn gen_data(&self) -> Result<TransitionDataset<f64>> {
        self.timed(Stage::GenData, || {
            let data = self.generate_dataset()?;
            self.write(DATASET_FILE, &data.to_jsonl()?)?;
            Ok(data)
        })
    }

    /// Fits the configured model and writes its description.
    pub fn fit_model(&self) -> Result<DynModel> {
        let data = self.dataset()?;
        self.timed(Stage::FitModel, || {
            let model = self.model(&data)?;
            let doc = json!({
                "config_hash": self.hash,
                "seed": self.seed,
                "fingerprint": model.fingerprint(),
                "state_dim": model.state_dim(),
                "action_bounds": model.action_bounds(),
                "normalizer": data.normalizer()?,
            });
            self.write(MODEL_FILE, serde_json::to_string_pretty(&doc)?.as_bytes())?;
            Ok(model)
        })
    }

    /// Plans optimal actions for dataset states and ranks the features.
    pub fn select_features(&self) -> Result<FeatureRanking> {
        let data = self.dataset()?;
        let model = self.model(&data)?;
        self.timed(Stage::SelectFeatures, || {
            let fs = &self.config.feature_selection;
            let settings = PsopSettings::new(
                fs.horizon,
                self.config.fitness.discount,
                fs.swarm_size,
                fs.iterations,
                self.stage_seed(Stage::SelectFeatures),
            );
            let states: Vec<Vec<f64>> = data.transitions.iter().map(|t| t.s.clone()).collect();
            let max = if fs.max_states == 0 { None } else { Some(fs.max_states) };
            let pairs = optimal_pairs(&model, &states, max, &settings)?;
            let n_select = if fs.n_select == 0 { model.state_dim() } else { fs.n_select };
            let ranking = rank_features(&pairs, n_select, fs.bins)?;
            let by_action: Map<String, Value> = ranking
                .actions
                .iter()
                .enumerate()
                .map(|(a, list)| (a.to_string(), json!(list)))
                .collect();
            let doc = json!({
                "config_hash": self.hash,
                "seed": self.seed,
                "states": pairs.len(),
                "ranking": by_action,
            });
            self.write(RANKING_FILE, serde_json::to_string_pretty(&doc)?.as_bytes())?;
            self.record_budget(
                Stage::SelectFeatures,
                json!({
                    "states": pairs.len(),
                    "sequence_evaluations_per_state": settings.budget(),
                    "sequence_evaluations": pairs.evaluations,
                }),
            )?;
            Ok(ranking)
        })
    }

    fn read_ranking(&self) -> Result<FeatureRanking> {
        let text = fs::read_to_string(self.path(RANKING_FILE))?;
        let doc: Value = serde_json::from_str(&text)?;
        let by_action = doc["ranking"]
            .as_object()
            .ok_or_else(|| Error::structure("ranking file lacks a ranking object"))?;
        let mut actions = Vec::new();
        for a in 0..by_action.len() {
            let list = by_action
                .get(&a.to_string())
                .ok_or_else(|| Error::structure(format!("ranking file lacks action {a}")))?;
            actions.push(serde_json::from_value(list.clone())?);
        }
        Ok(FeatureRanking { actions })
    }

    fn fpsrl_layout(&self, action_dim: usize, state_dim: usize) -> Result<ParameterLayout> {
        let c = &self.config.fpsrl;
        let per_action: Vec<Vec<usize>> = if c.use_ranking {
            let ranking = match self.read_ranking() {
                Ok(r) => r,
                Err(_) => self.select_features()?,
            };
            let n = self.config.feature_selection.n_select.max(1);
            (0..action_dim)
                .map(|a| ranking.features(a).into_iter().take(n).collect())
                .collect()
        } else if c.features.is_empty() {
            vec![(0..state_dim).collect(); action_dim]
        } else {
            vec![c.features.clone(); action_dim]
        };
        Ok(ParameterLayout::new(
            per_action.into_iter().map(|f| ActionLayout::new(f, c.rules)).collect(),
        ))
    }

    /// Trains a fixed-structure policy with the particle swarm.
    pub fn fpsrl(&self) -> Result<(FuzzyPolicy<f64>, f64)> {
        let data = self.dataset()?;
        let env = self.env();
        let layout = self.fpsrl_layout(env.action_dim(), env.state_dim())?;
        let context = self.context(&data)?;
        let evaluator = self.evaluator(self.model(&data)?, self.start_states())?;
        self.timed(Stage::Fpsrl, || {
            let c = &self.config.fpsrl;
            let mut settings = FpsrlSettings::new(c.swarm_size, c.iterations, self.stage_seed(Stage::Fpsrl));
            settings.topology = c.topology();
            let result = fpsrl_train(&layout, &evaluator, &context, &settings)?;
            let complexity = PolicyTree::from_policy(&result.policy).complexity();
            let doc = PolicyDocument {
                policy: result.policy.clone(),
                metadata: self.metadata(complexity, result.fitness),
            };
            self.write(FPSRL_POLICY_FILE, doc.to_json()?.as_bytes())?;
            let swarm = c.swarm_size as u64;
            let mut csv = String::from("iteration,evaluations,best_fitness,penalty,config_hash,seed\n");
            for (i, f) in result.history.iter().enumerate() {
                csv += &format!("{},{},{},{},{},{}\n", i + 1, swarm * (i as u64 + 1), f, -f, self.hash, self.seed);
            }
            self.write(FPSRL_CURVE_FILE, csv.as_bytes())?;
            self.record_budget(
                Stage::Fpsrl,
                json!({
                    "swarm_size": c.swarm_size,
                    "iterations": c.iterations,
                    "declared": settings.swarm_size as u64 * settings.iterations as u64,
                    "counted": evaluator.evaluations(),
                }),
            )?;
            Ok((result.policy, result.fitness))
        })
    }

    fn pareto_records(
        &self,
        archive: &ParetoArchive<f64>,
        context: &PolicyContext<f64>,
    ) -> Result<Vec<ParetoRecord>> {
        let real = if self.config.output.real_evaluation {
            Some(self.real_evaluator(self.test_states())?)
        } else {
            None
        };
        archive
            .front()
            .into_iter()
            .map(|e| {
                let policy = e.tree.to_policy(context)?;
                Ok(ParetoRecord {
                    complexity: e.complexity,
                    fitness_model: e.fitness,
                    fitness_real: real.as_ref().map(|r| r.score_fuzzy(&policy)),
                    generation_found: e.generation_found,
                    policy: PolicyDocument {
                        policy,
                        metadata: self.metadata(e.complexity, e.fitness),
                    },
                    tree: e.tree.clone(),
                    config_hash: self.hash.clone(),
                    seed: self.seed,
                })
            })
            .collect()
    }

    fn write_front(&self, records: &[ParetoRecord], jsonl: &str, csv: &str) -> Result<()> {
        let mut lines = Vec::new();
        for r in records {
            serde_json::to_writer(&mut lines, r)?;
            lines.push(b'\n');
        }
        self.write(jsonl, &lines)?;
        let mut text = String::from("complexity,fitness,penalty,penalty_real_test,config_hash,seed\n");
        for r in records {
            let real = r.fitness_real.map(|f| (-f).to_string()).unwrap_or_default();
            text += &format!(
                "{},{},{},{},{},{}\n",
                r.complexity, r.fitness_model, -r.fitness_model, real, self.hash, self.seed
            );
        }
        self.write(csv, text.as_bytes())
    }

    /// Evolves policy trees and writes the Pareto front.
    pub fn fgprl(&self) -> Result<ParetoArchive<f64>> {
        let data = self.dataset()?;
        let context = self.context(&data)?;
        let evaluator = self.evaluator(self.model(&data)?, self.start_states())?;
        self.timed(Stage::Fgprl, || {
            let gp = self.config.fgprl.gp_config(self.stage_seed(Stage::Fgprl));
            let result = evolve(&evaluator, &context, &gp)?;
            let records = self.pareto_records(&result.archive, &context)?;
            self.write_front(&records, FGPRL_PARETO_FILE, FGPRL_FRONT_FILE)?;
            let mut csv = String::from("generation,best_fitness,penalty,levels,config_hash,seed\n");
            for (g, levels) in result.history.iter().enumerate() {
                let best = levels.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
                csv += &format!("{},{},{},{},{},{}\n", g, best, -best, levels.len(), self.hash, self.seed);
            }
            self.write(FGPRL_CURVE_FILE, csv.as_bytes())?;
            let slots = gp.ratios.slots(gp.population);
            self.record_budget(
                Stage::Fgprl,
                json!({
                    "population": gp.population,
                    "generations": gp.generations,
                    "generations_run": result.elites_per_generation.len(),
                    "max_evaluations": gp.max_evaluations,
                    "slots": slots,
                    "elites": result.elites_per_generation.iter().sum::<usize>(),
                    "elite_copies": gp.elite_copies,
                    "declared": gp.budget(&result.elites_per_generation),
                    "counted": evaluator.evaluations(),
                    "breakdown": result.tally,
                }),
            )?;
            Ok(result.archive)
        })
    }

    /// Reads a Pareto JSON-lines file back into an archive.
    pub fn read_pareto(path: &Path) -> Result<ParetoArchive<f64>> {
        let mut archive = ParetoArchive::new();
        for line in fs::read_to_string(path)?.lines().filter(|l| !l.trim().is_empty()) {
            let r: ParetoRecord = serde_json::from_str(line)?;
            archive.offer(&r.tree, r.fitness_model, r.generation_found);
        }
        Ok(archive)
    }

    /// Tunes the constants of every front member; `input` defaults to the
    /// bundle's evolved front.
    pub fn tune(&self, input: Option<&Path>) -> Result<ParetoArchive<f64>> {
        let source = input.map(Path::to_path_buf).unwrap_or_else(|| self.path(FGPRL_PARETO_FILE));
        let archive = if source.exists() || input.is_some() {
            Self::read_pareto(&source)?
        } else {
            self.fgprl()?
        };
        let data = self.dataset()?;
        let context = self.context(&data)?;
        let evaluator = self.evaluator(self.model(&data)?, self.start_states())?;
        self.timed(Stage::Tune, || {
            let ls = &self.config.local_search;
            let settings = LocalSearchSettings::new(ls.swarm_size, ls.iterations, self.stage_seed(Stage::Tune));
            let members = archive.front().len();
            let tuned = tune_front(&archive, &evaluator, &context, &settings);
            let records = self.pareto_records(&tuned, &context)?;
            self.write_front(&records, TUNED_PARETO_FILE, TUNED_FRONT_FILE)?;
            self.record_budget(
                Stage::Tune,
                json!({
                    "individuals": members,
                    "per_individual": settings.budget(),
                    "declared": settings.budget() * members as u64,
                    "counted": evaluator.evaluations(),
                }),
            )?;
            Ok(tuned)
        })
    }

    /// Scores the bundle's final policies on the model and the true system.
    pub fn evaluate(&self) -> Result<EvaluationReport> {
        let data = self.dataset()?;
        let context = self.context(&data)?;
        let model = self.model(&data)?;
        let fingerprint = model.fingerprint();
        let on_model = self.evaluator(model, self.start_states())?;
        let on_real = self.real_evaluator(self.start_states())?;
        let on_test = self.real_evaluator(self.test_states())?;
        self.timed(Stage::Evaluate, || {
            let mut policies: Vec<(String, usize, FuzzyPolicy<f64>)> = Vec::new();
            if let Ok(text) = fs::read_to_string(self.path(FPSRL_POLICY_FILE)) {
                let doc = PolicyDocument::<f64>::from_json(&text)?;
                let complexity = PolicyTree::from_policy(&doc.policy).complexity();
                policies.push(("fpsrl".into(), complexity, doc.policy));
            }
            for (method, file) in [("fgprl", FGPRL_PARETO_FILE), ("fgprl+tuned", TUNED_PARETO_FILE)] {
                if self.path(file).exists() {
                    for e in Self::read_pareto(&self.path(file))?.front() {
                        policies.push((method.into(), e.complexity, e.tree.to_policy(&context)?));
                    }
                }
            }
            let rows = policies
                .into_iter()
                .map(|(method, complexity, p)| {
                    let compiled = p.compile();
                    let model = on_model.fitness(&compiled)?;
                    let real = on_real.fitness(&compiled)?;
                    Ok(EvaluationRow {
                        method,
                        complexity,
                        fitness_model: model,
                        fitness_real_train: real,
                        gap: model - real,
                        fitness_test: on_test.fitness(&compiled)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = EvaluationReport {
                config_hash: self.hash.clone(),
                seed: self.seed,
                model: fingerprint.clone(),
                rows,
            };
            self.write(EVALUATION_FILE, serde_json::to_string_pretty(&report)?.as_bytes())?;
            Ok(report)
        })
    }

    /// Runs every configured stage, recording each outcome in the manifest.
    /// Stops at the first failure; files written so far are kept.
    pub fn run_all(&self) -> Result<()> {
        let mut stages = vec![Stage::GenData, Stage::FitModel];
        if self.config.fpsrl.use_ranking {
            stages.push(Stage::SelectFeatures);
        }
        stages.extend([Stage::Fpsrl, Stage::Fgprl]);
        if self.config.local_search.enabled {
            stages.push(Stage::Tune);
        }
        stages.push(Stage::Evaluate);
        let mut records = Vec::new();
        let mut outcome = Ok(());
        for stage in stages {
            let result = self.run_stage(stage);
            records.push(StageRecord {
                stage,
                status: if result.is_ok() { "ok".into() } else { "failed".into() },
                error: result.as_ref().err().map(|e| e.to_string()),
            });
            if let Err(e) = result {
                outcome = Err(e);
                break;
            }
        }
        let manifest = json!({
            "config_hash": self.hash,
            "seed": self.seed,
            "config": self.config,
            "stages": records,
        });
        self.write(MANIFEST_FILE, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        outcome
    }

    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        match stage {
            Stage::GenData => self.gen_data().map(drop),
            Stage::FitModel => self.fit_model().map(drop),
            Stage::SelectFeatures => self.select_features().map(drop),
            Stage::Fpsrl => self.fpsrl().map(drop),
            Stage::Fgprl => self.fgprl().map(drop),
            Stage::Tune => self.tune(None).map(drop),
            Stage::Evaluate => self.evaluate().map(drop),
        }
    }
}

/// Counter-free fitness of `policy` on the true system from `starts`.
pub fn real_fitness(env: &DynEnv, policy: &FuzzyPolicy<f64>, horizon: usize, discount: f64, starts: Vec<Vec<f64>>) -> Result<f64> {
    let cfg = FitnessConfig::new(horizon, discount, starts)?;
    crate::rollout::fitness(&policy.compile(), &exact_model(env), &cfg, &EvaluationCounter::new())
}
