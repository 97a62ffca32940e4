use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::params::{init_params, GnnParams};
use super::propagate::{forward, infer_logits, loss_and_grad, softmax_rows, GraphView};
use super::HyperParams;
use crate::error::{Error, Result};
use crate::graph::{select_columns, Graph};
use crate::metrics::micro_f1;
use crate::sampler::{derive_seed, rng_from_seed, SubspaceSpec};

/// Trained weights bound to the subspace they were trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub params: GnnParams,
    pub spec: SubspaceSpec,
    /// Micro-F1 on the model's own training nodes.
    pub train_f1: f64,
}

/// A trained model together with its per-epoch training loss.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: BaseModel,
    /// Loss before each epoch's first update.
    pub loss_history: Vec<f64>,
}

/// Seed of the Glorot draw for the model trained on `spec`.
pub fn init_seed_for(spec: &SubspaceSpec, hp: &HyperParams) -> u64 {
    derive_seed(spec.seed, hp.init_seed)
}

/// Trains a base model on the subgraph induced by `spec.node_subset`,
/// restricted to `spec.feature_subset`.
pub fn train_base_model(g: &Graph, spec: &SubspaceSpec, hp: &HyperParams) -> Result<BaseModel> {
    train_base_model_traced(g, spec, hp).map(|o| o.model)
}

/// [`train_base_model`], also returning the loss curve.
pub fn train_base_model_traced(
    g: &Graph,
    spec: &SubspaceSpec,
    hp: &HyperParams,
) -> Result<TrainOutcome> {
    hp.validate()?;
    let (sub, _) = g.induced_subgraph(&spec.node_subset)?;
    let sub = sub.restrict_features(&spec.feature_subset)?;
    let train: Vec<usize> = sub
        .splits()
        .train
        .iter()
        .copied()
        .filter(|&v| sub.label(v).is_some())
        .collect();
    if train.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    let labels = sub.labels_of(&train)?;
    if labels.iter().all(|&c| c == labels[0]) {
        return Err(Error::DegenerateSubspace {
            model_index: spec.model_index,
            attempts: 0,
        });
    }

    let init_seed = init_seed_for(spec, hp);
    let mut params = init_params(hp, sub.num_features(), g.num_classes(), init_seed);
    let mut rng = rng_from_seed(derive_seed(init_seed, 1));
    let mut opt = Adam::new(
        &params,
        hp.learning_rate,
        hp.adam_beta1,
        hp.adam_beta2,
        hp.adam_eps,
    );
    let view = GraphView::from(&sub);
    let mut loss_history = Vec::with_capacity(hp.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..hp.epochs {
        if hp.batch_size == 0 || hp.batch_size >= train.len() {
            let cache = forward(&params, view, hp.neighbor_cap, &mut rng)?;
            let (loss, grads) = loss_and_grad(&params, &train, &labels, &cache, hp.weight_decay)?;
            loss_history.push(loss);
            opt.step(&mut params, &grads);
        } else {
            order.shuffle(&mut rng);
            for (i, chunk) in order.chunks(hp.batch_size).enumerate() {
                let nodes: Vec<usize> = chunk.iter().map(|&i| train[i]).collect();
                let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
                let cache = forward(&params, view, hp.neighbor_cap, &mut rng)?;
                let (loss, grads) = loss_and_grad(&params, &nodes, &ys, &cache, hp.weight_decay)?;
                if i == 0 {
                    loss_history.push(loss);
                }
                opt.step(&mut params, &grads);
            }
        }
    }

    let logits = forward(&params, view, 0, &mut rng)?.into_logits();
    let predicted = argmax_rows(&logits.select(Axis(0), &train));
    let train_f1 = micro_f1(&predicted, &labels)?;
    Ok(TrainOutcome {
        model: BaseModel {
            params,
            spec: spec.clone(),
            train_f1,
        },
        loss_history,
    })
}

/// Index of each row's maximum; ties go to the smallest index.
pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &x) in row.iter().enumerate() {
                if x > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

impl BaseModel {
    /// Class posteriors for `nodes`, computed over the full structure of `g`
    /// with only this model's feature columns.
    pub fn predict_posterior(&self, g: &Graph, nodes: &[usize]) -> Result<Array2<f64>> {
        let needed = self.spec.feature_subset.last().map_or(0, |&d| d + 1);
        if g.num_features() < needed {
            return Err(Error::DimensionMismatch(format!(
                "model reads feature {} but the graph has {} columns",
                needed - 1,
                g.num_features()
            )));
        }
        let masked = select_columns(g.features(), &self.spec.feature_subset)?;
        let view = GraphView::new(g.adjacency(), &masked);
        Ok(softmax_rows(&infer_logits(&self.params, view, nodes)?))
    }
}

/// Free-function form of [`BaseModel::predict_posterior`].
pub fn predict_posterior(model: &BaseModel, g: &Graph, nodes: &[usize]) -> Result<Array2<f64>> {
    model.predict_posterior(g, nodes)
}
