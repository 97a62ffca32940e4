use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HyperParams;
use crate::sampler::rng_from_seed;

/// One message-passing layer: `w` transforms the mean of the neighbor
/// embeddings, `b` transforms the node's own embedding. Both are `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array2<f64>,
}

impl Layer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Layer {
            w: Array2::zeros((output, input)),
            b: Array2::zeros((output, input)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }
}

/// Weights of an `L`-layer network. The last layer emits class logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnParams {
    pub layers: Vec<Layer>,
}

impl GnnParams {
    /// All-zero parameters with the layer widths `dims[0] → dims[1] → …`.
    pub fn zeros(dims: &[usize]) -> Self {
        GnnParams {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        GnnParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.input_dim(), l.output_dim()))
                .collect(),
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Every weight matrix, `w` before `b`, layer by layer.
    pub fn tensors(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Array2<f64>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b])
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().map(|t| t.len()).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors().flat_map(|t| t.iter()).map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().flat_map(|t| t.iter()).all(|x| x.is_finite())
    }

    /// Checks that consecutive layers chain (`in_{l+1} = out_l`).
    pub fn shapes_chain(&self) -> bool {
        !self.layers.is_empty()
            && self.layers.iter().all(|l| l.w.dim() == l.b.dim())
            && self
                .layers
                .windows(2)
                .all(|p| p[0].output_dim() == p[1].input_dim())
    }
}

/// Layer widths for an input of `input_dim` features and `classes` outputs.
pub fn layer_dims(hp: &HyperParams, input_dim: usize, classes: usize) -> Vec<usize> {
    let mut dims = vec![input_dim];
    dims.extend(std::iter::repeat_n(hp.hidden, hp.layers.saturating_sub(1)));
    dims.push(classes);
    dims
}

/// Glorot-uniform initialization: each entry uniform in
/// `±sqrt(6 / (fan_in + fan_out))`.
pub fn init_params(hp: &HyperParams, input_dim: usize, classes: usize, seed: u64) -> GnnParams {
    let mut rng = rng_from_seed(seed);
    let mut params = GnnParams::zeros(&layer_dims(hp, input_dim, classes));
    for t in params.tensors_mut() {
        let (fan_out, fan_in) = t.dim();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        t.mapv_inplace(|_| rng.gen_range(-limit..=limit));
    }
    params
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded() {
        let hp = HyperParams::default();
        assert_eq!(init_params(&hp, 5, 3, 11), init_params(&hp, 5, 3, 11));
        assert_ne!(init_params(&hp, 5, 3, 11), init_params(&hp, 5, 3, 12));
    }

    #[test]
    fn init_respects_glorot_range() {
        let hp = HyperParams {
            layers: 3,
            hidden: 16,
            ..HyperParams::default()
        };
        let p = init_params(&hp, 7, 3, 0);
        assert!(p.shapes_chain());
        assert_eq!(p.input_dim(), 7);
        assert_eq!(p.num_classes(), 3);
        for t in p.tensors() {
            let (o, i) = t.dim();
            let limit = (6.0 / (o + i) as f64).sqrt();
            assert!(t.iter().all(|x| x.abs() <= limit));
        }
    }

    #[test]
    fn single_entry_layer() {
        let hp = HyperParams {
            layers: 1,
            ..HyperParams::default()
        };
        let p = init_params(&hp, 1, 1, 5);
        let limit = 3f64.sqrt();
        assert_eq!(p.layers[0].w.dim(), (1, 1));
        assert!(p.layers[0].w[[0, 0]].abs() <= limit);
        assert!(p.layers[0].b[[0, 0]].abs() <= limit);
    }
}
