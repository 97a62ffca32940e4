//! Experiment configuration: built-in defaults, overridden by a flat
//! `key = value` file, overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use graph_forest::dataset::{generate_sbm, load_graph, GraphFiles, SbmConfig};
use graph_forest::ensemble::{EnsembleConfig, Voting};
use graph_forest::gnn::HyperParams;
use graph_forest::Graph;

use crate::CliError;

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Directory holding `edges.tsv`, `features.csv`, `labels.csv`, `splits.csv`.
    Files(PathBuf),
    Sbm(SbmConfig),
}

/// The SBM fixture used throughout the experiments.
pub fn default_sbm() -> SbmConfig {
    SbmConfig {
        n: 600,
        classes: 3,
        p_in: 0.1,
        p_out: 0.01,
        dim: 60,
        signal: 0.6,
        noise_sd: 1.0,
        train_fraction: 0.1,
        seed: 7,
    }
}

impl FromStr for DatasetSource {
    type Err = CliError;

    /// `sbm` or `sbm:key=value,...` (keys `n s p_in p_out d signal noise_sd
    /// train_fraction seed`), otherwise a directory path.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let Some(rest) = s.strip_prefix("sbm") else {
            return Ok(DatasetSource::Files(PathBuf::from(s)));
        };
        let mut cfg = default_sbm();
        let rest = rest.strip_prefix(':').unwrap_or(rest);
        for item in rest.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| usage(format!("sbm parameter `{item}` is not key=value")))?;
            match key.trim() {
                "n" => cfg.n = parse(key, value)?,
                "s" => cfg.classes = parse(key, value)?,
                "p_in" => cfg.p_in = parse(key, value)?,
                "p_out" => cfg.p_out = parse(key, value)?,
                "d" => cfg.dim = parse(key, value)?,
                "signal" => cfg.signal = parse(key, value)?,
                "noise_sd" => cfg.noise_sd = parse(key, value)?,
                "train_fraction" => cfg.train_fraction = parse(key, value)?,
                "seed" => cfg.seed = parse(key, value)?,
                other => return Err(usage(format!("unknown sbm parameter `{other}`"))),
            }
        }
        Ok(DatasetSource::Sbm(cfg))
    }
}

impl std::fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetSource::Files(p) => write!(f, "{}", p.display()),
            DatasetSource::Sbm(c) => write!(
                f,
                "sbm:n={},s={},p_in={},p_out={},d={},signal={},noise_sd={},train_fraction={},seed={}",
                c.n, c.classes, c.p_in, c.p_out, c.dim, c.signal, c.noise_sd, c.train_fraction, c.seed
            ),
        }
    }
}

impl DatasetSource {
    pub fn load(&self) -> graph_forest::Result<Graph> {
        match self {
            DatasetSource::Files(dir) => load_graph(&GraphFiles::in_dir(dir)),
            DatasetSource::Sbm(cfg) => generate_sbm(cfg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Random,
    Greedy,
}

impl FromStr for AttackKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "random" => Ok(AttackKind::Random),
            "greedy" => Ok(AttackKind::Greedy),
            _ => Err(usage(format!("unknown attack `{s}`"))),
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttackKind::Random => "random",
            AttackKind::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub voting: Voting,
    pub hyper: HyperParams,
    pub master_seed: u64,
    pub parallelism: usize,
    pub output_dir: PathBuf,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub hidden_list: Vec<usize>,
    pub reverse: bool,
    pub attack: AttackKind,
    pub budget: f64,
    pub targets: usize,
    pub pool: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Sbm(default_sbm()),
            k: 25,
            alpha: 0.7,
            beta: 0.5,
            voting: Voting::Soft,
            hyper: HyperParams::default(),
            master_seed: 0,
            parallelism: 0,
            output_dir: PathBuf::from("out"),
            alphas: vec![0.3, 0.7, 1.0],
            betas: vec![0.1, 0.3, 0.5, 0.7, 1.0],
            hidden_list: vec![256, 2048],
            reverse: false,
            attack: AttackKind::Random,
            budget: 0.1,
            targets: 30,
            pool: 32,
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid value `{}` for `{key}`", value.trim())))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| parse(key, x))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(usage(format!("invalid boolean `{other}` for `{key}`"))),
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let hp = &mut self.hyper;
        match key {
            "dataset" => self.dataset = value.trim().parse()?,
            "k" => self.k = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "voting" => self.voting = value.trim().parse().map_err(|e| usage(format!("{e}")))?,
            "seed" | "master_seed" => self.master_seed = parse(key, value)?,
            "init_seed" => hp.init_seed = parse(key, value)?,
            "parallelism" => self.parallelism = parse(key, value)?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "layers" => hp.layers = parse(key, value)?,
            "hidden" => hp.hidden = parse(key, value)?,
            "neighbor_cap" => hp.neighbor_cap = parse(key, value)?,
            "batch_size" => hp.batch_size = parse(key, value)?,
            "epochs" => hp.epochs = parse(key, value)?,
            "learning_rate" | "lr" => hp.learning_rate = parse(key, value)?,
            "weight_decay" => hp.weight_decay = parse(key, value)?,
            "alphas" => self.alphas = parse_list(key, value)?,
            "betas" => self.betas = parse_list(key, value)?,
            "hidden_list" => self.hidden_list = parse_list(key, value)?,
            "reverse" => self.reverse = parse_bool(key, value)?,
            "attack" => self.attack = value.trim().parse()?,
            "budget" => self.budget = parse(key, value)?,
            "targets" => self.targets = parse(key, value)?,
            "pool" => self.pool = parse(key, value)?,
            other => return Err(usage(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!("{}:{}: expected key = value", path.display(), i + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            master_seed: self.master_seed,
            voting: self.voting,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.ensemble().validate().map_err(|e| usage(e.to_string()))?;
        self.hyper.validate().map_err(|e| usage(e.to_string()))?;
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                return Err(usage(format!("alpha {a} outside (0, 1]")));
            }
        }
        for &b in &self.betas {
            if !(b > 0.0 && b <= 1.0) {
                return Err(usage(format!("beta {b} outside (0, 1]")));
            }
        }
        if self.hidden_list.contains(&0) {
            return Err(usage("hidden widths must be positive"));
        }
        if !(0.0..=1.0).contains(&self.budget) {
            return Err(usage(format!("budget {} outside [0, 1]", self.budget)));
        }
        Ok(())
    }

    /// Settings echoed into every report row.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("dataset", self.dataset.to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("init_seed", self.hyper.init_seed.to_string()),
            ("layers", self.hyper.layers.to_string()),
            ("epochs", self.hyper.epochs.to_string()),
            ("learning_rate", self.hyper.learning_rate.to_string()),
            ("weight_decay", self.hyper.weight_decay.to_string()),
        ]
    }
}
