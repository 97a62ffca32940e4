//! Evaluation arithmetic: micro-F1, the train/test gap and an analytical
//! cost model for ensembles of sampled message-passing networks.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Micro-aggregated confusion counts over all classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Single-label counts: a wrong prediction is a false positive for the
    /// predicted class and a false negative for the true class.
    pub fn from_labels(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch {
                expected: truth.len(),
                found: pred.len(),
            });
        }
        if pred.is_empty() {
            return Err(Error::EmptyInput);
        }
        let tp = pred.iter().zip(truth).filter(|(p, t)| p == t).count() as u64;
        let wrong = pred.len() as u64 - tp;
        Ok(ConfusionCounts {
            tp,
            fp: wrong,
            fn_: wrong,
        })
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Micro-averaged F1 of single-label predictions.
pub fn micro_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    ConfusionCounts::from_labels(pred, truth).map(|c| c.f1())
}

/// Training F1 minus test F1; negative when the model does better on test.
pub fn overfit_gap(train_f1: f64, test_f1: f64) -> f64 {
    train_f1 - test_f1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    GraphSage,
    FastGcn,
    ClusterGcn,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphsage" => Ok(ModelKind::GraphSage),
            "fastgcn" => Ok(ModelKind::FastGcn),
            "clustergcn" => Ok(ModelKind::ClusterGcn),
            _ => Err(Error::UnknownCostModel(s.to_string())),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::GraphSage => "graphsage",
            ModelKind::FastGcn => "fastgcn",
            ModelKind::ClusterGcn => "clustergcn",
        })
    }
}

/// Inputs to [`cost_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostInputs {
    /// Layers.
    pub l: u32,
    /// Ensemble size.
    pub k: u32,
    pub n: f64,
    pub m: f64,
    /// Node sampling fraction.
    pub alpha: f64,
    /// Fraction of edges preserved by node sampling.
    pub alpha_star: f64,
    pub d: f64,
    /// Feature sampling fraction.
    pub beta: f64,
    /// Batch size.
    pub b: f64,
    /// Sampled neighbors per node.
    pub r: f64,
}

impl CostInputs {
    /// Single full-graph model: `k = 1` and all fractions 1.
    pub fn baseline(l: u32, n: f64, m: f64, d: f64, b: f64, r: f64) -> Self {
        CostInputs {
            l,
            k: 1,
            n,
            m,
            alpha: 1.0,
            alpha_star: 1.0,
            d,
            beta: 1.0,
            b,
            r,
        }
    }
}

/// Asymptotic time and space bodies evaluated with unit constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub model_kind: ModelKind,
    pub time_units: f64,
    pub space_units: f64,
}

/// Evaluates the per-backbone complexity bodies for an ensemble of `k`
/// models trained on `αn` nodes and `βd` features. Units rank
/// configurations; they are not seconds or bytes.
pub fn cost_estimate(kind: ModelKind, c: &CostInputs) -> Result<CostEstimate> {
    let counts_ok = c.l >= 1
        && c.k >= 1
        && [c.n, c.m, c.d, c.b, c.r].iter().all(|&x| x > 0.0 && x.is_finite());
    let fractions_ok = [c.alpha, c.alpha_star, c.beta]
        .iter()
        .all(|&f| f > 0.0 && f <= 1.0);
    if !counts_ok || !fractions_ok {
        return Err(Error::InvalidConfig(format!(
            "cost inputs out of range: {c:?}"
        )));
    }
    let k = c.k as f64;
    let l = c.l as f64;
    let nodes = c.alpha * c.n;
    let dims = c.beta * c.d;
    let r_l = c.r.powi(c.l as i32);
    let (time, space) = match kind {
        ModelKind::GraphSage => (
            k * r_l * nodes * dims * dims,
            k * (c.b * r_l * dims + l * dims * dims),
        ),
        ModelKind::FastGcn => (
            k * c.r * l * nodes * dims * dims,
            k * (c.b * c.r * l * dims + l * dims * dims),
        ),
        ModelKind::ClusterGcn => (
            k * (l * c.alpha_star * c.m * dims + l * nodes * dims * dims),
            k * (c.b * l * dims + l * dims * dims),
        ),
    };
    Ok(CostEstimate {
        model_kind: kind,
        time_units: time,
        space_units: space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn micro_f1_examples() {
        assert_eq!(micro_f1(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(micro_f1(&[0, 1, 1, 2], &[0, 1, 2, 2]).unwrap(), 0.75);
        assert_eq!(micro_f1(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert!(matches!(micro_f1(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(micro_f1(&[0], &[0, 1]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn confusion_counts_balance() {
        let c = ConfusionCounts::from_labels(&[0, 2, 1, 1, 0], &[0, 1, 1, 2, 0]).unwrap();
        assert_eq!(c.tp + c.fp, 5);
        assert_eq!(c.tp + c.fn_, 5);
    }

    #[test]
    fn overfit_gap_examples() {
        assert!((overfit_gap(0.9766, 0.953) - 0.0236).abs() < 1e-12);
        assert_eq!(overfit_gap(0.8, 0.8), 0.0);
        assert!((overfit_gap(0.9648, 0.965) + 0.0002).abs() < 1e-12);
    }

    #[test]
    fn graphsage_baseline_and_beta_scaling() {
        let base = CostInputs::baseline(2, 100.0, 400.0, 16.0, 8.0, 5.0);
        let est = cost_estimate(ModelKind::GraphSage, &base).unwrap();
        assert_eq!(est.time_units, 25.0 * 100.0 * 256.0);
        let half = CostInputs { beta: 0.5, ..base };
        let est_half = cost_estimate(ModelKind::GraphSage, &half).unwrap();
        assert_eq!(est_half.time_units * 4.0, est.time_units);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = CostInputs {
            alpha: 0.0,
            ..CostInputs::baseline(2, 1.0, 1.0, 1.0, 1.0, 1.0)
        };
        assert!(cost_estimate(ModelKind::FastGcn, &bad).is_err());
        assert!(matches!("gat".parse::<ModelKind>(), Err(Error::UnknownCostModel(_))));
        assert_eq!("ClusterGCN".parse::<ModelKind>().unwrap(), ModelKind::ClusterGcn);
    }
}
