//! Seeded selection of per-model random subspaces (node subsets and feature
//! subsets) and neighbor subsampling.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Generator used for every seeded draw in the crate. ChaCha output is
/// stable across platforms and releases, which keeps saved seeds meaningful.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Redraws allowed after the first draw before giving up on a subspace.
pub const MAX_REDRAWS: u32 = 16;

/// One base model's node and feature subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub model_index: usize,
    /// Sorted original node ids.
    pub node_subset: Vec<usize>,
    /// Sorted original feature dimensions.
    pub feature_subset: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    /// Seed of the draw that produced this spec.
    pub seed: u64,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-model seed. Bijective in `model_index` for a fixed master seed and
/// bijective in `master_seed` for a fixed index.
pub fn derive_seed(master_seed: u64, model_index: u64) -> u64 {
    mix64(mix64(master_seed).wrapping_add(model_index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Size of a fractional sample, rounded up so it is never empty.
pub fn sample_size(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).ceil() as usize).clamp(1, total.max(1))
}

fn check_fraction(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must lie in (0, 1], got {value}")))
    }
}

/// Draws the subspace of model `model_index`.
///
/// Nodes and feature dimensions are drawn uniformly without replacement. A draw
/// whose training nodes carry fewer than two classes is retried with the next
/// seed, at most [`MAX_REDRAWS`] times.
pub fn sample_subspace(
    g: &Graph,
    alpha: f64,
    beta: f64,
    model_index: usize,
    master_seed: u64,
) -> Result<SubspaceSpec> {
    check_fraction("alpha", alpha)?;
    check_fraction("beta", beta)?;
    let n = g.num_nodes();
    let d = g.num_features();
    if n == 0 {
        return Err(Error::EmptyNodeSet);
    }
    if d == 0 {
        return Err(Error::EmptyDimSet);
    }
    let node_count = sample_size(alpha, n);
    let dim_count = sample_size(beta, d);

    let mut is_train = vec![false; n];
    for &v in &g.splits().train {
        is_train[v] = true;
    }

    let base = derive_seed(master_seed, model_index as u64);
    for attempt in 0..=MAX_REDRAWS {
        let seed = base.wrapping_add(attempt as u64);
        let mut rng = rng_from_seed(seed);
        let mut node_subset = index::sample(&mut rng, n, node_count).into_vec();
        node_subset.sort_unstable();
        let mut feature_subset = index::sample(&mut rng, d, dim_count).into_vec();
        feature_subset.sort_unstable();

        let mut classes = node_subset
            .iter()
            .filter(|&&v| is_train[v])
            .filter_map(|&v| g.label(v));
        let covered = match classes.next() {
            Some(first) => classes.any(|c| c != first),
            None => false,
        };
        if covered {
            return Ok(SubspaceSpec {
                model_index,
                node_subset,
                feature_subset,
                alpha,
                beta,
                seed,
            });
        }
    }
    Err(Error::DegenerateSubspace {
        model_index,
        attempts: MAX_REDRAWS + 1,
    })
}

/// Uniform subset of at most `cap` neighbors, kept in input order.
pub fn sample_neighbors<R: Rng + ?Sized>(neigh: &[usize], cap: usize, rng: &mut R) -> Vec<usize> {
    let cap = cap.max(1);
    if neigh.len() <= cap {
        return neigh.to_vec();
    }
    let mut picked = index::sample(rng, neigh.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| neigh[i]).collect()
}
