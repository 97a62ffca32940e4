//! Forward pass and exact reverse-mode gradients of the mean-aggregation
//! network.
//!
//! Layer `l` computes `Z_l = M H_{l-1} W_lᵀ + H_{l-1} B_lᵀ`, where `M` is the
//! row-normalized (possibly neighbor-capped) adjacency. Hidden layers apply
//! ReLU; the last layer returns logits. The gradient of the aggregation is
//! `Mᵀ`, applied by scattering each node's upstream gradient divided by its
//! neighborhood size back onto the neighbors.

use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;

use super::params::GnnParams;
use crate::error::{Error, Result};
use crate::graph::{Csr, Graph};
use crate::sampler::sample_neighbors;

/// Structure plus node features; the features may be a masked copy while
/// the structure is borrowed from a [`Graph`].
#[derive(Debug, Clone, Copy)]
pub struct GraphView<'a> {
    pub adjacency: &'a Csr,
    pub features: ArrayView2<'a, f64>,
}

impl<'a> GraphView<'a> {
    pub fn new(adjacency: &'a Csr, features: &'a Array2<f64>) -> Self {
        GraphView {
            adjacency,
            features: features.view(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_nodes()
    }
}

impl<'a> From<&'a Graph> for GraphView<'a> {
    fn from(g: &'a Graph) -> Self {
        GraphView::new(g.adjacency(), g.features())
    }
}

/// Neighborhoods used by one layer.
#[derive(Debug, Clone)]
enum Hood<'a> {
    Full(&'a Csr),
    Capped(Vec<Vec<usize>>),
}

impl Hood<'_> {
    #[inline]
    fn row(&self, v: usize) -> &[usize] {
        match self {
            Hood::Full(csr) => csr.row(v),
            Hood::Capped(rows) => &rows[v],
        }
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<'a> {
    /// `H_{l-1}` for each layer (the first is the feature matrix).
    inputs: Vec<Array2<f64>>,
    /// `M H_{l-1}` for each layer.
    aggregates: Vec<Array2<f64>>,
    hoods: Vec<Hood<'a>>,
    logits: Array2<f64>,
}

impl ForwardCache<'_> {
    pub fn logits(&self) -> &Array2<f64> {
        &self.logits
    }

    pub fn into_logits(self) -> Array2<f64> {
        self.logits
    }
}

/// Row means of `h` over each node's neighborhood; empty neighborhoods give zeros.
fn mean_aggregate(hood: &Hood<'_>, h: &Array2<f64>) -> Array2<f64> {
    mean_aggregate_rows(hood, h, 0..h.nrows())
}

/// [`mean_aggregate`] restricted to `rows`, in the order given.
fn mean_aggregate_rows(
    hood: &Hood<'_>,
    h: &Array2<f64>,
    rows: impl ExactSizeIterator<Item = usize>,
) -> Array2<f64> {
    let c = h.ncols();
    let src = h.as_slice().expect("activations are contiguous");
    let mut out = Array2::<f64>::zeros((rows.len(), c));
    let dst = out.as_slice_mut().expect("fresh array is contiguous");
    for (i, v) in rows.enumerate() {
        let neigh = hood.row(v);
        if neigh.is_empty() {
            continue;
        }
        let acc = &mut dst[i * c..(i + 1) * c];
        for &u in neigh {
            for (a, x) in acc.iter_mut().zip(&src[u * c..(u + 1) * c]) {
                *a += x;
            }
        }
        let deg = neigh.len() as f64;
        acc.iter_mut().for_each(|a| *a /= deg);
    }
    out
}

/// Adjoint of [`mean_aggregate`]: accumulates `Mᵀ grad` into `into`.
fn scatter_mean_transpose(hood: &Hood<'_>, grad: &Array2<f64>, into: &mut Array2<f64>) {
    let c = grad.ncols();
    let src = grad.as_slice().expect("gradients are contiguous");
    let dst = into.as_slice_mut().expect("gradients are contiguous");
    for v in 0..grad.nrows() {
        let neigh = hood.row(v);
        if neigh.is_empty() {
            continue;
        }
        let deg = neigh.len() as f64;
        let g = &src[v * c..(v + 1) * c];
        for &u in neigh {
            for (a, x) in dst[u * c..(u + 1) * c].iter_mut().zip(g) {
                *a += x / deg;
            }
        }
    }
}

/// Runs the network on every node of `view`.
///
/// `cap = 0` aggregates over full neighborhoods. Otherwise each layer draws
/// at most `cap` neighbors per node from `rng`.
pub fn forward<'a, R: Rng + ?Sized>(
    params: &GnnParams,
    view: GraphView<'a>,
    cap: usize,
    rng: &mut R,
) -> Result<ForwardCache<'a>> {
    check_shapes(params, &view)?;

    let depth = params.num_layers();
    let mut inputs = Vec::with_capacity(depth);
    let mut aggregates = Vec::with_capacity(depth);
    let mut hoods = Vec::with_capacity(depth);
    let mut h = view.features.as_standard_layout().into_owned();
    for (l, layer) in params.layers.iter().enumerate() {
        let hood = if cap == 0 {
            Hood::Full(view.adjacency)
        } else {
            Hood::Capped(
                (0..view.num_nodes())
                    .map(|v| sample_neighbors(view.adjacency.row(v), cap, rng))
                    .collect(),
            )
        };
        let agg = mean_aggregate(&hood, &h);
        let mut z = agg.dot(&layer.w.t());
        z += &h.dot(&layer.b.t());
        if l + 1 < depth {
            z.mapv_inplace(|x| x.max(0.0));
        }
        inputs.push(h);
        aggregates.push(agg);
        hoods.push(hood);
        h = z;
    }
    Ok(ForwardCache {
        inputs,
        aggregates,
        hoods,
        logits: h,
    })
}

/// Logits of `nodes` (one row each, in order) over full neighborhoods.
///
/// Produces the same values as the matching rows of [`forward`] with no
/// neighbor cap, but keeps no activations and evaluates the last layer on
/// the requested rows only.
pub fn infer_logits(params: &GnnParams, view: GraphView<'_>, nodes: &[usize]) -> Result<Array2<f64>> {
    check_shapes(params, &view)?;
    let n = view.num_nodes();
    if let Some(&node) = nodes.iter().find(|&&v| v >= n) {
        return Err(Error::NodeOutOfRange { node, n });
    }
    let hood = Hood::Full(view.adjacency);
    let depth = params.num_layers();
    let mut h = view.features.as_standard_layout().into_owned();
    for layer in &params.layers[..depth - 1] {
        let mut z = mean_aggregate(&hood, &h).dot(&layer.w.t());
        z += &h.dot(&layer.b.t());
        z.mapv_inplace(|x| x.max(0.0));
        h = z;
    }
    let last = &params.layers[depth - 1];
    let agg = mean_aggregate_rows(&hood, &h, nodes.iter().copied());
    let mut z = agg.dot(&last.w.t());
    z += &h.select(ndarray::Axis(0), nodes).dot(&last.b.t());
    Ok(z)
}

fn check_shapes(params: &GnnParams, view: &GraphView<'_>) -> Result<()> {
    if params.num_layers() == 0 || !params.shapes_chain() {
        return Err(Error::DimensionMismatch("layer shapes do not chain".into()));
    }
    if view.features.ncols() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} feature columns, model expects {}",
            view.features.ncols(),
            params.input_dim()
        )));
    }
    if view.features.nrows() != view.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for {} nodes",
            view.features.nrows(),
            view.num_nodes()
        )));
    }
    Ok(())
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|x| x / sum);
    }
    out
}

/// Mean softmax cross-entropy over `nodes` plus `weight_decay / 2 · ‖θ‖²`,
/// and its exact gradient with respect to every parameter.
pub fn loss_and_grad(
    params: &GnnParams,
    nodes: &[usize],
    labels: &[usize],
    cache: &ForwardCache<'_>,
    weight_decay: f64,
) -> Result<(f64, GnnParams)> {
    if nodes.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    if nodes.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: nodes.len(),
            found: labels.len(),
        });
    }
    let logits = &cache.logits;
    let (n, s) = logits.dim();
    if let Some(&node) = nodes.iter().find(|&&v| v >= n) {
        return Err(Error::NodeOutOfRange { node, n });
    }
    if let Some(&label) = labels.iter().find(|&&c| c >= s) {
        return Err(Error::DimensionMismatch(format!(
            "label {label} outside the model's {s} classes"
        )));
    }

    let scale = 1.0 / nodes.len() as f64;
    let mut data_loss = 0.0;
    let mut upstream = Array2::<f64>::zeros((n, s));
    for (&v, &y) in nodes.iter().zip(labels) {
        let row = logits.row(v);
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let sum_exp: f64 = row.iter().map(|&x| (x - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        data_loss += log_z - row[y];
        let mut grad = upstream.row_mut(v);
        for c in 0..s {
            grad[c] += scale * (row[c] - log_z).exp();
        }
        grad[y] -= scale;
    }
    let loss = data_loss * scale + 0.5 * weight_decay * params.squared_norm();

    let mut grads = params.zeros_like();
    let depth = params.num_layers();
    let mut dz = upstream;
    for l in (0..depth).rev() {
        let layer = &params.layers[l];
        let input = &cache.inputs[l];
        let agg = &cache.aggregates[l];
        let g = &mut grads.layers[l];
        g.w = dz.t().dot(agg);
        g.b = dz.t().dot(input);
        if weight_decay != 0.0 {
            g.w.scaled_add(weight_decay, &layer.w);
            g.b.scaled_add(weight_decay, &layer.b);
        }
        if l == 0 {
            break;
        }
        let mut dh = dz.dot(&layer.b);
        let dagg = dz.dot(&layer.w);
        scatter_mean_transpose(&cache.hoods[l], &dagg, &mut dh);
        // `input` is the ReLU output of layer l-1
        Zip::from(&mut dh).and(input).for_each(|d, &a| {
            if a <= 0.0 {
                *d = 0.0;
            }
        });
        dz = dh;
    }
    Ok((loss, grads))
}
