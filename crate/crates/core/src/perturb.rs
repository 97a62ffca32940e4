//! Evasion attacks that add or delete edges of the test-time graph within a
//! budget, and the clean-versus-attacked evaluation harness.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Csr, Graph};
use crate::metrics::micro_f1;
use crate::par::map_indexed;
use crate::sampler::rng_from_seed;

/// Maximum number of edge flips, as a fraction of the clean edge count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBudget {
    pub fraction: f64,
    pub resolved_edges: usize,
}

impl AttackBudget {
    /// `⌊fraction · m⌋` flips. A zero fraction is accepted and means no attack.
    pub fn new(fraction: f64, num_edges: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidConfig(format!(
                "budget fraction must lie in [0, 1], got {fraction}"
            )));
        }
        Ok(AttackBudget {
            fraction,
            resolved_edges: (fraction * num_edges as f64).floor() as usize,
        })
    }

    pub fn for_graph(fraction: f64, g: &Graph) -> Result<Self> {
        Self::new(fraction, g.num_edges())
    }
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Rejection attempts before a uniform non-edge draw gives up.
const MAX_PAIR_DRAWS: usize = 10_000;

/// Flips `budget.resolved_edges` distinct node pairs. Each flip deletes a
/// uniformly chosen edge or adds a uniformly chosen non-edge with equal
/// probability; a pair is never flipped twice.
pub fn random_flip_attack(g: &Graph, budget: AttackBudget, seed: u64) -> Graph {
    let n = g.num_nodes();
    let mut rng = rng_from_seed(seed);
    let mut edges: BTreeSet<(usize, usize)> = g.adjacency().edges().collect();
    let mut deletable: Vec<(usize, usize)> = edges.iter().copied().collect();
    let mut used = BTreeSet::new();

    for _ in 0..budget.resolved_edges {
        let want_delete = rng.gen_bool(0.5);
        let added = if want_delete && !deletable.is_empty() {
            None
        } else {
            draw_non_edge(n, &edges, &used, &mut rng)
        };
        match added {
            Some(pair) => {
                edges.insert(pair);
                used.insert(pair);
            }
            None if !deletable.is_empty() => {
                let pair = deletable.swap_remove(rng.gen_range(0..deletable.len()));
                edges.remove(&pair);
                used.insert(pair);
            }
            None => break,
        }
    }
    let adjacency = Csr::from_edges(n, edges).expect("flips stay within the node range");
    g.with_adjacency(adjacency)
}

fn draw_non_edge<R: Rng>(
    n: usize,
    edges: &BTreeSet<(usize, usize)>,
    used: &BTreeSet<(usize, usize)>,
    rng: &mut R,
) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    for _ in 0..MAX_PAIR_DRAWS {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let pair = ordered(u, v);
        if !edges.contains(&pair) && !used.contains(&pair) {
            return Some(pair);
        }
    }
    None
}

/// `v` together with every node within two hops, sorted.
fn two_hop(adj: &Csr, v: usize) -> Vec<usize> {
    let mut out = vec![v];
    for &u in adj.row(v) {
        out.push(u);
        out.extend_from_slice(adj.row(u));
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Settings of [`greedy_confidence_attack`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyConfig {
    pub budget: AttackBudget,
    /// Candidate flips scored per step.
    pub pool_size: usize,
    pub seed: u64,
    /// Workers scoring candidates; `0` uses every core.
    pub parallelism: usize,
}

/// Fresh candidate pools drawn in one step before the attack stops for
/// lack of a flip that does not raise the victim's confidence.
const MAX_POOLS_PER_STEP: usize = 4;

/// Black-box greedy evasion attack.
///
/// `victim` maps a graph to the posteriors of `targets` (one row per target,
/// in order). Each step samples `pool_size` unused pairs with one endpoint
/// within two hops of a random target, queries the victim on each flipped
/// graph and keeps the flip with the lowest mean true-class confidence; the
/// first such candidate wins ties. A flip that would raise the confidence is
/// never accepted, so the attack may stop before the budget is spent.
pub fn greedy_confidence_attack<F>(
    g: &Graph,
    victim: F,
    targets: &[usize],
    cfg: GreedyConfig,
) -> Result<Graph>
where
    F: Fn(&Graph) -> Result<Array2<f64>> + Sync,
{
    let truth = g.labels_of(targets)?;
    let n = g.num_nodes();
    if targets.is_empty() || n < 2 || cfg.budget.resolved_edges == 0 || cfg.pool_size == 0 {
        return Ok(g.clone());
    }
    let confidence = |graph: &Graph| -> Result<f64> {
        let post = victim(graph)?;
        if post.dim() != (targets.len(), g.num_classes()) {
            return Err(Error::Oracle(format!(
                "expected {}x{} posteriors, got {:?}",
                targets.len(),
                g.num_classes(),
                post.dim()
            )));
        }
        let total: f64 = truth.iter().enumerate().map(|(i, &c)| post[[i, c]]).sum();
        Ok(total / targets.len() as f64)
    };

    let threads = crate::par::available_threads(cfg.parallelism);
    let mut rng = rng_from_seed(cfg.seed);
    let mut used = BTreeSet::new();
    let mut current = g.clone();
    let mut current_conf = confidence(&current)?;

    'steps: for _ in 0..cfg.budget.resolved_edges {
        for _ in 0..MAX_POOLS_PER_STEP {
            let pool = draw_candidates(&current, targets, &used, cfg.pool_size, &mut rng);
            if pool.is_empty() {
                break 'steps;
            }
            let scores = map_indexed(pool.len(), threads, |i| {
                let (u, v) = pool[i];
                let flipped = current.with_adjacency(current.adjacency().toggled(u, v));
                confidence(&flipped)
            });
            let mut best: Option<(usize, f64)> = None;
            for (i, score) in scores.into_iter().enumerate() {
                let score = score?;
                if best.is_none_or(|(_, b)| score < b) {
                    best = Some((i, score));
                }
            }
            let (i, score) = best.expect("pool is non-empty");
            if score <= current_conf {
                let (u, v) = pool[i];
                current = current.with_adjacency(current.adjacency().toggled(u, v));
                current_conf = score;
                used.insert(pool[i]);
                continue 'steps;
            }
        }
        break;
    }
    Ok(current)
}

fn draw_candidates<R: Rng>(
    g: &Graph,
    targets: &[usize],
    used: &BTreeSet<(usize, usize)>,
    pool_size: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let n = g.num_nodes();
    let mut pool = Vec::with_capacity(pool_size);
    let mut seen = BTreeSet::new();
    for _ in 0..pool_size * 50 {
        if pool.len() == pool_size {
            break;
        }
        let t = targets[rng.gen_range(0..targets.len())];
        let hood = two_hop(g.adjacency(), t);
        let u = hood[rng.gen_range(0..hood.len())];
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let pair = ordered(u, v);
        if !used.contains(&pair) && seen.insert(pair) {
            pool.push(pair);
        }
    }
    pool
}

/// Clean and attacked micro-F1 of one decision rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessReport {
    pub f1_clean: f64,
    pub f1_attacked: f64,
    /// `f1_clean − f1_attacked`.
    pub drop: f64,
}

/// Scores `decider` on `eval_nodes` of the clean and the attacked graph.
pub fn robustness_eval<D>(
    decider: D,
    clean: &Graph,
    attacked: &Graph,
    eval_nodes: &[usize],
    truth: &[usize],
) -> Result<RobustnessReport>
where
    D: Fn(&Graph, &[usize]) -> Result<Vec<usize>>,
{
    let f1_clean = micro_f1(&decider(clean, eval_nodes)?, truth)?;
    let f1_attacked = micro_f1(&decider(attacked, eval_nodes)?, truth)?;
    Ok(RobustnessReport {
        f1_clean,
        f1_attacked,
        drop: f1_clean - f1_attacked,
    })
}

/// Number of node pairs whose adjacency differs between two graphs.
pub fn edge_edit_distance(a: &Graph, b: &Graph) -> usize {
    let ea: BTreeSet<_> = a.adjacency().edges().collect();
    let eb: BTreeSet<_> = b.adjacency().edges().collect();
    ea.symmetric_difference(&eb).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_sbm, SbmConfig};

    fn fixture() -> Graph {
        generate_sbm(&SbmConfig {
            n: 40,
            classes: 2,
            p_in: 0.25,
            p_out: 0.03,
            dim: 4,
            signal: 1.0,
            noise_sd: 1.0,
            train_fraction: 0.5,
            seed: 5,
        })
        .unwrap()
    }

    #[test]
    fn budget_rounds_down() {
        assert_eq!(AttackBudget::new(0.1, 100).unwrap().resolved_edges, 10);
        assert_eq!(AttackBudget::new(0.001, 100).unwrap().resolved_edges, 0);
        assert!(AttackBudget::new(1.5, 10).is_err());
    }

    #[test]
    fn random_flips_respect_budget() {
        let g = fixture();
        let budget = AttackBudget::for_graph(0.1, &g).unwrap();
        let a = random_flip_attack(&g, budget, 3);
        assert_eq!(edge_edit_distance(&g, &a), budget.resolved_edges);
        assert!(a.num_edges().abs_diff(g.num_edges()) <= budget.resolved_edges);
        assert_eq!(a, random_flip_attack(&g, budget, 3));
        assert_eq!(a.features(), g.features());
        assert_eq!(a.labels(), g.labels());

        let none = AttackBudget::new(0.001, g.num_edges()).unwrap();
        assert_eq!(random_flip_attack(&g, none, 3), g);
    }

    #[test]
    fn greedy_with_constant_oracle_spends_budget() {
        let g = fixture();
        let targets = vec![0, 1, 30];
        let budget = AttackBudget::new(0.05, g.num_edges()).unwrap();
        let cfg = GreedyConfig {
            budget,
            pool_size: 4,
            seed: 2,
            parallelism: 1,
        };
        let oracle = |_: &Graph| Ok(Array2::from_elem((3, 2), 0.5));
        let a = greedy_confidence_attack(&g, oracle, &targets, cfg).unwrap();
        assert_eq!(edge_edit_distance(&g, &a), budget.resolved_edges);
        assert_eq!(a, greedy_confidence_attack(&g, oracle, &targets, cfg).unwrap());

        let zero = GreedyConfig {
            budget: AttackBudget::new(0.0, g.num_edges()).unwrap(),
            ..cfg
        };
        assert_eq!(greedy_confidence_attack(&g, oracle, &targets, zero).unwrap(), g);
    }

    #[test]
    fn greedy_propagates_oracle_errors() {
        let g = fixture();
        let cfg = GreedyConfig {
            budget: AttackBudget::new(0.1, g.num_edges()).unwrap(),
            pool_size: 2,
            seed: 0,
            parallelism: 1,
        };
        let failing = |_: &Graph| -> Result<Array2<f64>> { Err(Error::Oracle("down".into())) };
        assert!(matches!(
            greedy_confidence_attack(&g, failing, &[0], cfg),
            Err(Error::Oracle(_))
        ));
    }

    #[test]
    fn robustness_of_unchanged_graph() {
        let g = fixture();
        let nodes: Vec<usize> = (0..10).collect();
        let truth = g.labels_of(&nodes).unwrap();
        let decider = |graph: &Graph, nodes: &[usize]| graph.labels_of(nodes);
        let r = robustness_eval(decider, &g, &g, &nodes, &truth).unwrap();
        assert_eq!(r.drop, 0.0);
        let attacked = random_flip_attack(&g, AttackBudget::for_graph(0.2, &g).unwrap(), 1);
        let r = robustness_eval(decider, &g, &attacked, &nodes, &truth).unwrap();
        assert_eq!((r.f1_clean, r.drop), (1.0, 0.0));
    }
}
