//! Bagged ensembles of base models over independent random subspaces, and
//! the rules that turn their posteriors into one decision per node.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};
use crate::gnn::{train_base_model, BaseModel, HyperParams};
use crate::graph::Graph;
use crate::par::map_indexed;
use crate::sampler::sample_subspace;

/// How base-model posteriors are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Voting {
    /// Majority of per-model argmax votes.
    Hard,
    /// Argmax of the averaged posteriors.
    #[default]
    Soft,
    /// Argmax of accuracy-weighted averaged posteriors.
    Weighted,
}

impl FromStr for Voting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Voting::Hard),
            "soft" => Ok(Voting::Soft),
            "weighted" => Ok(Voting::Weighted),
            _ => Err(Error::InvalidConfig(format!("unknown voting rule `{s}`"))),
        }
    }
}

impl fmt::Display for Voting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Voting::Hard => "hard",
            Voting::Soft => "soft",
            Voting::Weighted => "weighted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub master_seed: u64,
    pub voting: Voting,
}

impl EnsembleConfig {
    /// A single model on the full graph and all features.
    pub fn baseline(master_seed: u64) -> Self {
        EnsembleConfig {
            k: 1,
            alpha: 1.0,
            beta: 1.0,
            master_seed,
            voting: Voting::Soft,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("ensemble size k must be at least 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// `k` trained base models plus the aggregation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub models: Vec<BaseModel>,
    pub alpha: f64,
    pub beta: f64,
    pub master_seed: u64,
    pub voting: Voting,
    /// One non-negative weight per model, summing to one.
    pub weights: Vec<f64>,
}

/// Trains model `j` on `sample_subspace(g, alpha, beta, j, master_seed)`.
///
/// Models are stored by index, so the result is the same for any
/// `parallelism` (`0` uses every core). The first failing index aborts the
/// whole ensemble.
pub fn train_ensemble(
    g: &Graph,
    cfg: &EnsembleConfig,
    hp: &HyperParams,
    parallelism: usize,
) -> Result<EnsembleModel> {
    cfg.validate()?;
    hp.validate()?;
    let threads = crate::par::available_threads(parallelism);
    let results = map_indexed(cfg.k, threads, |j| {
        sample_subspace(g, cfg.alpha, cfg.beta, j, cfg.master_seed)
            .and_then(|spec| train_base_model(g, &spec, hp))
    });
    let mut models = Vec::with_capacity(cfg.k);
    for (index, r) in results.into_iter().enumerate() {
        models.push(r.map_err(|e| Error::BaseModel {
            index,
            source: Box::new(e),
        })?);
    }
    let weights = match cfg.voting {
        Voting::Weighted => {
            let acc: Vec<f64> = models.iter().map(|m| m.train_f1).collect();
            normalize_weights(&acc)?
        }
        _ => uniform_weights(cfg.k),
    };
    Ok(EnsembleModel {
        models,
        alpha: cfg.alpha,
        beta: cfg.beta,
        master_seed: cfg.master_seed,
        voting: cfg.voting,
        weights,
    })
}

pub fn uniform_weights(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Scales non-negative accuracies to sum to one.
pub fn normalize_weights(accuracies: &[f64]) -> Result<Vec<f64>> {
    if accuracies.is_empty() {
        return Err(Error::EmptyInput);
    }
    if accuracies.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
        return Err(Error::InvalidConfig("accuracies must be finite and non-negative".into()));
    }
    let total: f64 = accuracies.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroAccuracies);
    }
    Ok(accuracies.iter().map(|a| a / total).collect())
}

const MAGIC: &[u8; 4] = b"GFEN";

impl EnsembleModel {
    pub fn k(&self) -> usize {
        self.models.len()
    }

    /// Stacked posteriors of every model for `nodes`.
    pub fn posteriors(&self, g: &Graph, nodes: &[usize]) -> Result<PosteriorStack> {
        let slices = self
            .models
            .iter()
            .map(|m| m.predict_posterior(g, nodes))
            .collect::<Result<Vec<_>>>()?;
        PosteriorStack::from_slices(&slices, nodes.to_vec())
    }

    /// Decision per node under the configured voting rule.
    pub fn predict(&self, g: &Graph, nodes: &[usize]) -> Result<Vec<usize>> {
        let stack = self.posteriors(g, nodes)?;
        match self.voting {
            Voting::Hard => Ok(decide_hard(&stack)),
            Voting::Soft | Voting::Weighted => decide_soft(&stack, &self.weights),
        }
    }

    /// Switches to weighted voting with weights proportional to `accuracies`,
    /// e.g. each model's F1 on a held-out split.
    pub fn reweight(&mut self, accuracies: &[f64]) -> Result<()> {
        if accuracies.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                found: accuracies.len(),
            });
        }
        self.weights = normalize_weights(accuracies)?;
        self.voting = Voting::Weighted;
        Ok(())
    }

    /// Manifest followed by the `k` base models in one versioned record.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        codec::encode(MAGIC, self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        codec::decode(MAGIC, bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        codec::write(path, MAGIC, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        codec::read(path, MAGIC)
    }
}

/// `k × |nodes| × s` posteriors, slice `j` from model `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorStack {
    probs: Array3<f64>,
    nodes: Vec<usize>,
}

impl PosteriorStack {
    /// Stacks per-model posteriors; every row must sum to one within 1e-9.
    pub fn from_slices(slices: &[Array2<f64>], nodes: Vec<usize>) -> Result<Self> {
        let first = slices.first().ok_or(Error::EmptyInput)?;
        let (rows, s) = first.dim();
        if rows != nodes.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                found: rows,
            });
        }
        let mut probs = Array3::zeros((slices.len(), rows, s));
        for (j, slice) in slices.iter().enumerate() {
            if slice.dim() != (rows, s) {
                return Err(Error::DimensionMismatch(format!(
                    "slice {j} has shape {:?}, expected {:?}",
                    slice.dim(),
                    (rows, s)
                )));
            }
            for row in slice.rows() {
                let sum = row.sum();
                if row.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "slice {j} is not row-stochastic"
                    )));
                }
            }
            probs.index_axis_mut(Axis(0), j).assign(slice);
        }
        Ok(PosteriorStack { probs, nodes })
    }

    pub fn k(&self) -> usize {
        self.probs.dim().0
    }

    pub fn num_nodes(&self) -> usize {
        self.probs.dim().1
    }

    pub fn num_classes(&self) -> usize {
        self.probs.dim().2
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Posteriors of model `j`.
    pub fn slice(&self, j: usize) -> ArrayView2<'_, f64> {
        self.probs.index_axis(Axis(0), j)
    }

    pub fn get(&self, model: usize, node: usize, class: usize) -> f64 {
        self.probs[[model, node, class]]
    }
}

/// Weighted average of the model posteriors, summed in model-index order.
pub fn discriminant(stack: &PosteriorStack, weights: &[f64]) -> Result<Array2<f64>> {
    if weights.len() != stack.k() {
        return Err(Error::LengthMismatch {
            expected: stack.k(),
            found: weights.len(),
        });
    }
    let mut out = Array2::zeros((stack.num_nodes(), stack.num_classes()));
    for (j, &w) in weights.iter().enumerate() {
        out.scaled_add(w, &stack.slice(j));
    }
    Ok(out)
}

/// Averaged scores closer than this count as tied. Weighted sums of equal
/// posteriors taken in different orders can differ in the last bits.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// First index of the maximum.
fn argmax(row: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (c, x) in row.into_iter().enumerate() {
        if x > best_val {
            best = c;
            best_val = x;
        }
    }
    best
}

/// First index whose value is within [`TIE_TOLERANCE`] of the maximum.
fn argmax_tolerant(row: impl IntoIterator<Item = f64>) -> usize {
    let row: Vec<f64> = row.into_iter().collect();
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    row.iter().position(|&x| x >= max - TIE_TOLERANCE).unwrap_or(0)
}

/// Argmax of the discriminant; ties go to the smallest class id.
pub fn decide_soft(stack: &PosteriorStack, weights: &[f64]) -> Result<Vec<usize>> {
    let avg = discriminant(stack, weights)?;
    Ok(avg.rows().into_iter().map(|r| argmax_tolerant(r.iter().copied())).collect())
}

/// Majority vote of per-model argmaxes. Vote ties go to the class whose
/// voters were more confident on average, then to the smallest class id.
pub fn decide_hard(stack: &PosteriorStack) -> Vec<usize> {
    let (k, nodes, s) = stack.probs.dim();
    let mut votes = vec![0usize; s];
    let mut confidence = vec![0.0f64; s];
    (0..nodes)
        .map(|x| {
            votes.iter_mut().for_each(|v| *v = 0);
            confidence.iter_mut().for_each(|c| *c = 0.0);
            for j in 0..k {
                let row = stack.probs.index_axis(Axis(0), j);
                let row = row.row(x);
                let c = argmax(row.iter().copied());
                votes[c] += 1;
                confidence[c] += row[c];
            }
            let top = votes.iter().copied().max().unwrap_or(0);
            let mean = |c: usize| confidence[c] / votes[c] as f64;
            argmax_tolerant((0..s).map(|c| if votes[c] == top { mean(c) } else { f64::NEG_INFINITY }))
        })
        .collect()
}

/// Soft voting with weights proportional to each model's past accuracy.
pub fn decide_weighted(stack: &PosteriorStack, accuracies: &[f64]) -> Result<Vec<usize>> {
    if accuracies.len() != stack.k() {
        return Err(Error::LengthMismatch {
            expected: stack.k(),
            found: accuracies.len(),
        });
    }
    decide_soft(stack, &normalize_weights(accuracies)?)
}
