//! Independent dense reference implementations used as test oracles.
#![allow(dead_code)]

use graph_forest::gnn::GnnParams;
use graph_forest::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &ndarray::Array2<f64>) -> Dense {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matmul_t(a: &Dense, b: &Dense) -> Dense {
    // a · bᵀ
    a.iter()
        .map(|row| {
            b.iter()
                .map(|brow| row.iter().zip(brow).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().enumerate().map(|(k, x)| x * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// `D⁻¹A` as a dense matrix; rows of isolated nodes are zero.
pub fn mean_operator(g: &Graph) -> Dense {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v) in g.adjacency().edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    for row in a.iter_mut() {
        let deg: f64 = row.iter().sum();
        if deg > 0.0 {
            row.iter_mut().for_each(|x| *x /= deg);
        }
    }
    a
}

/// Logits computed layer by layer as `D⁻¹A H Wᵀ + H Bᵀ`, ReLU on hidden layers.
pub fn dense_forward(params: &GnnParams, g: &Graph, features: &Dense) -> Dense {
    let m = mean_operator(g);
    let mut h = features.clone();
    let depth = params.layers.len();
    for (l, layer) in params.layers.iter().enumerate() {
        let w = to_dense(&layer.w);
        let b = to_dense(&layer.b);
        let agg = matmul(&m, &h);
        let z1 = matmul_t(&agg, &w);
        let z2 = matmul_t(&h, &b);
        h = z1
            .iter()
            .zip(&z2)
            .map(|(r1, r2)| {
                r1.iter()
                    .zip(r2)
                    .map(|(x, y)| {
                        let z = x + y;
                        if l + 1 < depth {
                            z.max(0.0)
                        } else {
                            z
                        }
                    })
                    .collect()
            })
            .collect();
    }
    h
}

pub fn dense_softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Mean cross-entropy over `nodes` plus `wd/2 · ‖θ‖²`.
pub fn dense_loss(
    params: &GnnParams,
    g: &Graph,
    features: &Dense,
    nodes: &[usize],
    labels: &[usize],
    wd: f64,
) -> f64 {
    let logits = dense_forward(params, g, features);
    let ce: f64 = nodes
        .iter()
        .zip(labels)
        .map(|(&v, &y)| -dense_softmax(&logits[v])[y].ln())
        .sum::<f64>()
        / nodes.len() as f64;
    let norm: f64 = params.tensors().flat_map(|t| t.iter()).map(|x| x * x).sum();
    ce + 0.5 * wd * norm
}

/// Random graph on `n` nodes with edge probability `p`, `d` Gaussian-ish
/// features and labels in `[0, s)`; every node is in the training split.
pub fn random_graph(n: usize, d: usize, s: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let feats = ndarray::Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
    let labels = (0..n).map(|_| Some(rng.gen_range(0..s))).collect();
    let splits = graph_forest::Splits::new((0..n).collect(), vec![], vec![]);
    Graph::build(&edges, feats, labels, s, splits).unwrap()
}

/// Parameters with entries uniform in `[-scale, scale]`.
pub fn random_params(dims: &[usize], scale: f64, seed: u64) -> GnnParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = GnnParams::zeros(dims);
    for t in p.tensors_mut() {
        t.mapv_inplace(|_| rng.gen_range(-scale..scale));
    }
    p
}

pub fn max_abs_diff(a: &Dense, b: &ndarray::Array2<f64>) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            worst = worst.max((x - b[[i, j]]).abs());
        }
    }
    worst
}

/// Largest relative error between analytic gradients and central
/// differences of [`dense_loss`] with step `h`.
/// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(
    params: &GnnParams,
    analytic: &GnnParams,
    g: &Graph,
    nodes: &[usize],
    labels: &[usize],
    wd: f64,
    h: f64,
) -> f64 {
    let feats = to_dense(g.features());
    let mut worst = 0.0f64;
    let mut probe = params.clone();
    let grads: Vec<f64> = analytic.tensors().flat_map(|t| t.iter().copied()).collect();
    let count = grads.len();
    for idx in 0..count {
        let original = get_flat(&probe, idx);
        set_flat(&mut probe, idx, original + h);
        let up = dense_loss(&probe, g, &feats, nodes, labels, wd);
        set_flat(&mut probe, idx, original - h);
        let down = dense_loss(&probe, g, &feats, nodes, labels, wd);
        set_flat(&mut probe, idx, original);
        let numeric = (up - down) / (2.0 * h);
        let a = grads[idx];
        // entries below 1e-6 in magnitude are compared absolutely
        let denom = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

fn locate(p: &GnnParams, mut idx: usize) -> (usize, usize) {
    for (t, tensor) in p.tensors().enumerate() {
        if idx < tensor.len() {
            return (t, idx);
        }
        idx -= tensor.len();
    }
    panic!("index out of range")
}

fn get_flat(p: &GnnParams, idx: usize) -> f64 {
    let (t, i) = locate(p, idx);
    let tensor = p.tensors().nth(t).unwrap();
    tensor.as_slice().unwrap()[i]
}

fn set_flat(p: &mut GnnParams, idx: usize, value: f64) {
    let (t, i) = locate(p, idx);
    let tensor = p.tensors_mut().nth(t).unwrap();
    tensor.as_slice_mut().unwrap()[i] = value;
}
