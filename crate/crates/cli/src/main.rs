use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fuzzrl::experiment::{
    compare_fronts, comparison_csv, EvaluationReport, Experiment, ExperimentConfig, Stage, COMPARISON_FILE,
    EVALUATION_FILE,
};
use log::info;

#[derive(Parser)]
#[command(name = "fuzzrl", version, about = "Learn interpretable fuzzy policies from batch data")]
struct Cli {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record a transition dataset with random actions.
    GenData,
    /// Fit the configured system model.
    FitModel,
    /// Rank state features per action by mutual information.
    SelectFeatures,
    /// Train a fixed-structure policy with the particle swarm.
    Fpsrl,
    /// Evolve policy trees and write the Pareto front.
    Fgprl,
    /// Tune the constants of a Pareto front.
    Tune {
        /// Pareto JSON-lines file; the bundle's evolved front when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score the bundle's policies on the model and the true system.
    Evaluate,
    /// Summarize evaluation reports of several run directories.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Run every configured stage in order.
    Run,
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(ExperimentConfig::from_toml(&text)?)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn compare(runs: &[PathBuf], out_dir: &PathBuf) -> Result<()> {
    let mut reports = Vec::new();
    for dir in runs {
        let path = dir.join(EVALUATION_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let report: EvaluationReport =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        reports.push(report);
    }
    let csv = comparison_csv(&compare_fronts(&reports));
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(COMPARISON_FILE), &csv)?;
    print!("{csv}");
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    if let Command::Compare { runs } = &cli.command {
        return compare(runs, &cli.out_dir);
    }
    let exp = Experiment::new(load_config(cli.config.as_ref())?, cli.seed, &cli.out_dir)?;
    info!("seed {} config {} -> {}", exp.seed, exp.config_hash(), exp.out_dir.display());
    match cli.command {
        Command::GenData => exp.run_stage(Stage::GenData)?,
        Command::FitModel => exp.run_stage(Stage::FitModel)?,
        Command::SelectFeatures => exp.run_stage(Stage::SelectFeatures)?,
        Command::Fpsrl => {
            let (_, fitness) = exp.fpsrl()?;
            info!("fpsrl best fitness {fitness}");
        }
        Command::Fgprl => {
            let archive = exp.fgprl()?;
            info!("fgprl front has {} levels", archive.front().len());
        }
        Command::Tune { input } => {
            let archive = exp.tune(input.as_deref())?;
            info!("tuned front has {} levels", archive.front().len());
        }
        Command::Evaluate => {
            for row in exp.evaluate()?.rows {
                info!(
                    "{} complexity {}: model {} real {} test {}",
                    row.method, row.complexity, row.fitness_model, row.fitness_real_train, row.fitness_test
                );
            }
        }
        Command::Run => exp.run_all()?,
        Command::Compare { .. } => unreachable!(),
    }
    Ok(())
}
