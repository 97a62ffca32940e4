mod common;

use std::collections::BTreeSet;

use common::random_graph;
use graph_forest::dataset::{generate_sbm, SbmConfig};
use graph_forest::ensemble::{decide_hard, decide_soft, normalize_weights, uniform_weights, PosteriorStack};
use graph_forest::metrics::{cost_estimate, micro_f1, CostInputs, ModelKind};
use graph_forest::perturb::{random_flip_attack, AttackBudget};
use graph_forest::sampler::{sample_size, sample_subspace};
use graph_forest::{Graph, Splits};
use ndarray::Array2;
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, 0.0..0.6f64, any::<u64>()).prop_map(|(n, p, seed)| random_graph(n, 4, 3, p, seed))
}

/// Random posterior stack with `k` models, `n` nodes and `s` classes.
fn arb_stack() -> impl Strategy<Value = (PosteriorStack, usize)> {
    (1..=5usize, 1..=4usize, 2..=4usize).prop_flat_map(|(k, n, s)| {
        prop::collection::vec(prop::collection::vec(0.01..1.0f64, s), k * n).prop_map(move |raw| {
            let slices: Vec<Array2<f64>> = (0..k)
                .map(|j| {
                    Array2::from_shape_fn((n, s), |(x, c)| {
                        let row = &raw[j * n + x];
                        row[c] / row.iter().sum::<f64>()
                    })
                })
                .collect();
            (PosteriorStack::from_slices(&slices, (0..n).collect()).unwrap(), k)
        })
    })
}

fn reorder(stack: &PosteriorStack, order: &[usize]) -> PosteriorStack {
    let slices: Vec<Array2<f64>> = order.iter().map(|&j| stack.slice(j).to_owned()).collect();
    PosteriorStack::from_slices(&slices, stack.nodes().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn induced_subgraph_keeps_exactly_internal_edges(g in arb_graph(20), mask in prop::collection::vec(any::<bool>(), 20)) {
        let nodes: Vec<usize> = (0..g.num_nodes()).filter(|&v| mask[v]).collect();
        prop_assume!(!nodes.is_empty());
        let (sub, map) = g.induced_subgraph(&nodes).unwrap();
        let mut want = BTreeSet::new();
        for &u in &nodes {
            for &v in &nodes {
                if u < v && g.adjacency().has_edge(u, v) {
                    want.insert((u, v));
                }
            }
        }
        let got: BTreeSet<_> = sub
            .adjacency()
            .edges()
            .map(|(a, b)| (map.to_original(a), map.to_original(b)))
            .collect();
        prop_assert_eq!(got, want);
        for (s, &v) in map.original_ids().iter().enumerate() {
            prop_assert_eq!(map.to_sub(v), Some(s));
            prop_assert_eq!(sub.features().row(s), g.features().row(v));
            prop_assert_eq!(sub.label(s), g.label(v));
        }
    }

    #[test]
    fn restriction_commutes_with_induction(g in arb_graph(15), mask in prop::collection::vec(any::<bool>(), 15), dims in prop::collection::btree_set(0..4usize, 1..=4)) {
        let nodes: Vec<usize> = (0..g.num_nodes()).filter(|&v| mask[v]).collect();
        prop_assume!(!nodes.is_empty());
        let dims: Vec<usize> = dims.into_iter().collect();
        let a = g.induced_subgraph(&nodes).unwrap().0.restrict_features(&dims).unwrap();
        let b = g.restrict_features(&dims).unwrap().induced_subgraph(&nodes).unwrap().0;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn full_induction_and_restriction_are_identities(g in arb_graph(15)) {
        let all: Vec<usize> = (0..g.num_nodes()).collect();
        prop_assert_eq!(&g.induced_subgraph(&all).unwrap().0, &g);
        prop_assert_eq!(&g.restrict_features(&[0, 1, 2, 3]).unwrap(), &g);
    }

    #[test]
    fn micro_f1_is_accuracy_and_order_free(pairs in prop::collection::vec((0..4usize, 0..4usize), 1..60), seed in any::<u64>()) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let acc = pred.iter().zip(&truth).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64;
        let f1 = micro_f1(&pred, &truth).unwrap();
        prop_assert!((f1 - acc).abs() <= 1e-12);
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut graph_forest::sampler::rng_from_seed(seed));
        let p2: Vec<usize> = order.iter().map(|&i| pred[i]).collect();
        let t2: Vec<usize> = order.iter().map(|&i| truth[i]).collect();
        prop_assert_eq!(micro_f1(&p2, &t2).unwrap(), f1);
    }

    #[test]
    fn cost_grows_with_every_size_input(l in 1..4u32, k in 1..20u32, n in 10.0..1e4f64, d in 2.0..500.0f64, alpha in 0.1..0.9f64, beta in 0.1..0.9f64) {
        let base = CostInputs { k, alpha, alpha_star: alpha, beta, ..CostInputs::baseline(l, n, 3.0 * n, d, 32.0, 5.0) };
        for kind in [ModelKind::GraphSage, ModelKind::FastGcn, ModelKind::ClusterGcn] {
            let c0 = cost_estimate(kind, &base).unwrap();
            let bumps = [
                CostInputs { k: k + 1, ..base },
                CostInputs { alpha: alpha + 0.1, alpha_star: alpha + 0.1, ..base },
                CostInputs { beta: beta + 0.1, ..base },
                CostInputs { l: l + 1, ..base },
            ];
            for bigger in bumps {
                let c1 = cost_estimate(kind, &bigger).unwrap();
                prop_assert!(c1.time_units >= c0.time_units && c1.space_units >= c0.space_units);
            }
        }
    }

    #[test]
    fn soft_vote_ignores_model_order((stack, k) in arb_stack(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..k).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut graph_forest::sampler::rng_from_seed(seed));
        let w = uniform_weights(k);
        prop_assert_eq!(decide_soft(&stack, &w).unwrap(), decide_soft(&reorder(&stack, &order), &w).unwrap());
        prop_assert_eq!(decide_hard(&stack), decide_hard(&reorder(&stack, &order)));
    }

    #[test]
    fn identical_models_make_soft_and_hard_agree((stack, k) in arb_stack()) {
        let copies = reorder(&stack, &vec![0; k]);
        prop_assert_eq!(decide_soft(&copies, &uniform_weights(k)).unwrap(), decide_hard(&copies));
    }

    #[test]
    fn weights_are_scale_free((stack, k) in arb_stack(), acc in prop::collection::vec(0.05..1.0f64, 5), scale in 0.1..50.0f64) {
        let acc = &acc[..k];
        let scaled: Vec<f64> = acc.iter().map(|a| a * scale).collect();
        let w1 = normalize_weights(acc).unwrap();
        let w2 = normalize_weights(&scaled).unwrap();
        prop_assert!((w1.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(decide_soft(&stack, &w1).unwrap(), decide_soft(&stack, &w2).unwrap());
    }

    #[test]
    fn random_flips_respect_budget_and_invariants(g in arb_graph(20), fraction in 0.0..=1.0f64, seed in any::<u64>()) {
        let budget = AttackBudget::for_graph(fraction, &g).unwrap();
        let h = random_flip_attack(&g, budget, seed);
        prop_assert_eq!(h.num_nodes(), g.num_nodes());
        prop_assert_eq!(h.features(), g.features());
        prop_assert_eq!(h.labels(), g.labels());
        let before: BTreeSet<_> = g.adjacency().edges().collect();
        let after: BTreeSet<_> = h.adjacency().edges().collect();
        prop_assert!(before.symmetric_difference(&after).count() <= budget.resolved_edges);
        for v in 0..h.num_nodes() {
            prop_assert!(!h.adjacency().has_edge(v, v));
            for &u in h.adjacency().row(v) {
                prop_assert!(h.adjacency().has_edge(u, v));
            }
        }
    }
}

#[test]
fn node_sampling_is_uniform() {
    // balanced labels on every node keep class-coverage redraws rare
    let n = 20;
    let labels = (0..n).map(|v| Some(v % 2)).collect();
    let feats = Array2::from_shape_fn((n, 6), |(v, d)| (v * 7 + d) as f64);
    let g = Graph::build(&[], feats, labels, 2, Splits::new((0..n).collect(), vec![], vec![])).unwrap();
    let draws = 2000;
    let mut node_hits = vec![0usize; n];
    let mut dim_hits = vec![0usize; 6];
    for seed in 0..draws {
        let spec = sample_subspace(&g, 0.5, 0.5, 0, seed).unwrap();
        spec.node_subset.iter().for_each(|&v| node_hits[v] += 1);
        spec.feature_subset.iter().for_each(|&d| dim_hits[d] += 1);
    }
    let node_p = sample_size(0.5, n) as f64 / n as f64;
    for (v, &h) in node_hits.iter().enumerate() {
        let freq = h as f64 / draws as f64;
        assert!((freq - node_p).abs() <= 0.05, "node {v}: {freq}");
    }
    for (d, &h) in dim_hits.iter().enumerate() {
        let freq = h as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.05, "dim {d}: {freq}");
    }
}

#[test]
fn subspaces_differ_across_models() {
    let g = random_graph(60, 20, 3, 0.1, 3);
    let specs: BTreeSet<(Vec<usize>, Vec<usize>)> = (0..100)
        .map(|j| {
            let s = sample_subspace(&g, 0.7, 0.5, j, 42).unwrap();
            (s.node_subset, s.feature_subset)
        })
        .collect();
    assert_eq!(specs.len(), 100);
}

#[test]
fn sbm_edge_count_matches_expectation() {
    let cfg = SbmConfig {
        n: 120,
        classes: 3,
        p_in: 0.2,
        p_out: 0.02,
        dim: 2,
        signal: 1.0,
        noise_sd: 1.0,
        train_fraction: 0.5,
        seed: 0,
    };
    let sizes = cfg.block_sizes();
    let pairs = |k: usize| (k * k.saturating_sub(1) / 2) as f64;
    let within: f64 = sizes.iter().map(|&s| pairs(s)).sum();
    let across = pairs(cfg.n) - within;
    let expected = within * cfg.p_in + across * cfg.p_out;
    let variance = within * cfg.p_in * (1.0 - cfg.p_in) + across * cfg.p_out * (1.0 - cfg.p_out);
    let seeds = 50;
    let mean = (0..seeds)
        .map(|seed| generate_sbm(&SbmConfig { seed, ..cfg.clone() }).unwrap().num_edges() as f64)
        .sum::<f64>()
        / seeds as f64;
    let sd_of_mean = (variance / seeds as f64).sqrt();
    assert!((mean - expected).abs() <= 3.0 * sd_of_mean, "mean {mean} vs {expected} ± {}", 3.0 * sd_of_mean);
}
