//! The base learner: a mean-aggregation message-passing classifier trained
//! with softmax cross-entropy and Adam, in double precision.

mod adam;
mod io;
mod params;
mod propagate;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::Adam;
pub use io::{read_model, write_model};
pub use params::{init_params, layer_dims, GnnParams, Layer};
pub use propagate::{forward, infer_logits, loss_and_grad, softmax_rows, ForwardCache, GraphView};
pub use train::{
    argmax_rows, init_seed_for, predict_posterior, train_base_model, train_base_model_traced,
    BaseModel, TrainOutcome,
};

/// Architecture and optimizer settings of one base model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Number of message-passing layers, the last producing logits.
    pub layers: usize,
    pub hidden: usize,
    /// Per-layer neighbor cap during training; 0 aggregates full neighborhoods.
    pub neighbor_cap: usize,
    /// Training nodes per Adam step; 0 trains full-batch.
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub init_seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            layers: 3,
            hidden: 64,
            neighbor_cap: 0,
            batch_size: 0,
            epochs: 200,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            init_seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.layers == 0 {
            return bad("layers must be at least 1");
        }
        if self.hidden == 0 {
            return bad("hidden width must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight decay must be non-negative");
        }
        Ok(())
    }
}
