//! Command-line front end for graph-forest experiments.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::ExperimentConfig;

/// Overrides `--parallelism` when set.
pub const THREADS_ENV: &str = "GRAPH_FOREST_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Library(#[from] graph_forest::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) | CliError::Library(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "graph-forest", version, about = "Random-subspace GNN ensembles for node classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an ensemble and save it with a per-model training log.
    Train(Common),
    /// Test micro-F1 over a grid of node and feature sampling fractions.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated node fractions.
        #[arg(long)]
        alphas: Option<String>,
        /// Comma-separated feature fractions.
        #[arg(long)]
        betas: Option<String>,
    },
    /// Train/test gap of baseline and ensemble across hidden widths.
    Overfit {
        #[command(flatten)]
        common: Common,
        /// Swap the training and test splits.
        #[arg(long)]
        reverse: bool,
        /// Comma-separated hidden widths.
        #[arg(long = "hidden-list")]
        hidden_list: Option<String>,
    },
    /// F1 drop of baseline and ensemble under an edge-flip attack.
    Attack {
        #[command(flatten)]
        common: Common,
        /// `random` or `greedy`.
        #[arg(long)]
        attack: Option<String>,
        /// Maximum flips as a fraction of the edge count.
        #[arg(long)]
        budget: Option<f64>,
        /// Number of target nodes for the greedy attack.
        #[arg(long)]
        targets: Option<usize>,
        /// Candidate flips scored per greedy step.
        #[arg(long)]
        pool: Option<usize>,
    },
    /// Print a CSV report as a Markdown table.
    Report {
        /// CSV report written by another command.
        input: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensemble training (0 = one per core).
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory of graph files, or `sbm:key=value,...`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// `soft`, `hard` or `weighted`.
    #[arg(long)]
    voting: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long = "learning-rate")]
    learning_rate: Option<f64>,
    #[arg(long = "weight-decay")]
    weight_decay: Option<f64>,
    #[arg(long = "neighbor-cap")]
    neighbor_cap: Option<usize>,
    #[arg(long = "batch-size")]
    batch_size: Option<usize>,
    #[arg(long = "init-seed")]
    init_seed: Option<u64>,
}

impl Common {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("parallelism", self.parallelism.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("dataset", self.dataset.clone()),
            ("k", self.k.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("voting", self.voting.clone()),
            ("layers", self.layers.map(|v| v.to_string())),
            ("hidden", self.hidden.map(|v| v.to_string())),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("learning_rate", self.learning_rate.map(|v| v.to_string())),
            ("weight_decay", self.weight_decay.map(|v| v.to_string())),
            ("neighbor_cap", self.neighbor_cap.map(|v| v.to_string())),
            ("batch_size", self.batch_size.map(|v| v.to_string())),
            ("init_seed", self.init_seed.map(|v| v.to_string())),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Ok(threads) = std::env::var(THREADS_ENV) {
            cfg.set("parallelism", &threads)
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a thread count")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(common) => commands::cmd_train(&common.resolve(&[])?),
        Command::Sweep { common, alphas, betas } => {
            commands::cmd_sweep(&common.resolve(&[("alphas", alphas), ("betas", betas)])?)
        }
        Command::Overfit {
            common,
            reverse,
            hidden_list,
        } => {
            let reverse = reverse.then(|| "true".to_string());
            commands::cmd_overfit(&common.resolve(&[("reverse", reverse), ("hidden_list", hidden_list)])?)
        }
        Command::Attack {
            common,
            attack,
            budget,
            targets,
            pool,
        } => commands::cmd_attack(&common.resolve(&[
            ("attack", attack),
            ("budget", budget.map(|v| v.to_string())),
            ("targets", targets.map(|v| v.to_string())),
            ("pool", pool.map(|v| v.to_string())),
        ])?),
        Command::Report { input } => commands::cmd_report(&input),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
