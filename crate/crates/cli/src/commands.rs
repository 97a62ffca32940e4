//! The experiment verbs. Every command writes its tables as CSV and Markdown
//! under the output directory and echoes the configuration in each row.

use std::fs;
use std::path::{Path, PathBuf};

use graph_forest::dataset::{load_report, save_report, ReportFormat, ReportTable};
use graph_forest::ensemble::{decide_hard, decide_soft, train_ensemble, EnsembleConfig, EnsembleModel};
use graph_forest::gnn::HyperParams;
use graph_forest::graph::edge_preservation_ratio;
use graph_forest::metrics::{micro_f1, overfit_gap};
use graph_forest::perturb::{
    edge_edit_distance, greedy_confidence_attack, random_flip_attack, robustness_eval,
    AttackBudget, GreedyConfig,
};
use graph_forest::sampler::rng_from_seed;
use graph_forest::Graph;
use rand::seq::SliceRandom;

use crate::config::{AttackKind, ExperimentConfig};
use crate::CliError;

fn fmt_f1(x: f64) -> String {
    format!("{x:.4}")
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Header with the configuration echo appended.
fn header(cfg: &ExperimentConfig, columns: &[&str]) -> ReportTable {
    let mut cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
    cols.extend(cfg.echo().into_iter().map(|(k, _)| k.to_string()));
    ReportTable::new(cols)
}

fn push_row(table: &mut ReportTable, cfg: &ExperimentConfig, values: Vec<String>) -> Result<(), CliError> {
    let mut row = values;
    row.extend(cfg.echo().into_iter().map(|(_, v)| v));
    table.push(row)?;
    Ok(())
}

fn write_tables(dir: &Path, stem: &str, long: &ReportTable, layout: &ReportTable) -> Result<PathBuf, CliError> {
    let csv = dir.join(format!("{stem}.csv"));
    save_report(long, &csv, ReportFormat::Csv)?;
    save_report(layout, &dir.join(format!("{stem}.md")), ReportFormat::Markdown)?;
    Ok(csv)
}

fn load_graph(cfg: &ExperimentConfig) -> Result<Graph, CliError> {
    let g = cfg.dataset.load()?;
    let splits = g.splits();
    if splits.train.is_empty() || splits.test.is_empty() {
        return Err(CliError::Runtime("dataset needs non-empty train and test splits".into()));
    }
    Ok(g)
}

fn f1_on(model: &EnsembleModel, g: &Graph, nodes: &[usize]) -> Result<f64, CliError> {
    let truth = g.labels_of(nodes)?;
    Ok(micro_f1(&model.predict(g, nodes)?, &truth)?)
}

fn baseline_config(cfg: &ExperimentConfig) -> EnsembleConfig {
    EnsembleConfig::baseline(cfg.master_seed)
}

/// Trains the configured ensemble, writes `model.bin` and `train_log.csv`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = load_graph(cfg)?;
    create_dir(&cfg.output_dir)?;
    let model = train_ensemble(&g, &cfg.ensemble(), &cfg.hyper, cfg.parallelism)?;
    model.save(&cfg.output_dir.join("model.bin"))?;

    let mut log = header(
        cfg,
        &["model_index", "k", "alpha", "beta", "nodes", "features", "train_f1", "edge_preservation"],
    );
    for m in &model.models {
        let (sub, _) = g.induced_subgraph(&m.spec.node_subset)?;
        push_row(
            &mut log,
            cfg,
            vec![
                m.spec.model_index.to_string(),
                cfg.k.to_string(),
                cfg.alpha.to_string(),
                cfg.beta.to_string(),
                m.spec.node_subset.len().to_string(),
                m.spec.feature_subset.len().to_string(),
                fmt_f1(m.train_f1),
                format!("{:.4}", edge_preservation_ratio(&g, &sub)),
            ],
        )?;
    }
    save_report(&log, &cfg.output_dir.join("train_log.csv"), ReportFormat::Csv)?;

    let test_f1 = f1_on(&model, &g, &g.splits().test)?;
    println!(
        "trained k={} alpha={} beta={} voting={} seed={}: test micro-F1 {}",
        cfg.k,
        cfg.alpha,
        cfg.beta,
        cfg.voting,
        cfg.master_seed,
        fmt_f1(test_f1)
    );
    Ok(())
}

/// One ensemble per `(alpha, beta)` pair plus the single full-graph baseline.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.alphas.is_empty() || cfg.betas.is_empty() {
        return Err(CliError::Usage("sweep needs non-empty alpha and beta lists".into()));
    }
    let g = load_graph(cfg)?;
    create_dir(&cfg.output_dir)?;
    let test = g.splits().test.clone();
    let truth = g.labels_of(&test)?;

    let mut long = header(
        cfg,
        &["model", "k", "alpha", "beta", "voting", "test_f1", "soft_f1", "hard_f1", "hidden"],
    );
    let mut run = |name: &str, ens: &EnsembleConfig| -> Result<f64, CliError> {
        let model = train_ensemble(&g, ens, &cfg.hyper, cfg.parallelism)?;
        let stack = model.posteriors(&g, &test)?;
        let soft = micro_f1(&decide_soft(&stack, &model.weights)?, &truth)?;
        let hard = micro_f1(&decide_hard(&stack), &truth)?;
        let chosen = micro_f1(&model.predict(&g, &test)?, &truth)?;
        push_row(
            &mut long,
            cfg,
            vec![
                name.to_string(),
                ens.k.to_string(),
                ens.alpha.to_string(),
                ens.beta.to_string(),
                ens.voting.to_string(),
                fmt_f1(chosen),
                fmt_f1(soft),
                fmt_f1(hard),
                cfg.hyper.hidden.to_string(),
            ],
        )?;
        eprintln!(
            "{name} alpha={} beta={}: {} (soft {} / hard {}, hard-soft {:+.4})",
            ens.alpha,
            ens.beta,
            fmt_f1(chosen),
            fmt_f1(soft),
            fmt_f1(hard),
            hard - soft
        );
        Ok(chosen)
    };

    let baseline = run("baseline", &baseline_config(cfg))?;
    let mut grid = ReportTable::new(
        std::iter::once("alpha".to_string())
            .chain(std::iter::once("baseline".to_string()))
            .chain(cfg.betas.iter().map(|b| format!("beta={b}"))),
    );
    for &alpha in &cfg.alphas {
        let mut cells = vec![alpha.to_string(), fmt_f1(baseline)];
        for &beta in &cfg.betas {
            let ens = EnsembleConfig {
                alpha,
                beta,
                ..cfg.ensemble()
            };
            cells.push(fmt_f1(run("ensemble", &ens)?));
        }
        grid.push(cells)?;
    }
    let csv = write_tables(&cfg.output_dir, "sweep", &long, &grid)?;
    println!("{}", csv.display());
    Ok(())
}

/// Train/test F1 and their gap for the baseline and the ensemble at each
/// hidden width, optionally with training and test splits swapped.
pub fn cmd_overfit(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.hidden_list.is_empty() {
        return Err(CliError::Usage("overfit needs at least one hidden width".into()));
    }
    let mut g = load_graph(cfg)?;
    if cfg.reverse {
        g = g.with_splits(g.splits().reversed())?;
    }
    create_dir(&cfg.output_dir)?;
    let train = g.splits().train.clone();
    let test = g.splits().test.clone();

    let mut long = header(
        cfg,
        &["hidden", "model", "k", "alpha", "beta", "reverse", "train_f1", "test_f1", "gap"],
    );
    let mut layout = ReportTable::new([
        "hidden", "baseline train", "baseline test", "baseline gap", "ensemble train", "ensemble test",
        "ensemble gap",
    ]);
    for &hidden in &cfg.hidden_list {
        let hp = HyperParams {
            hidden,
            ..cfg.hyper.clone()
        };
        let mut cells = vec![hidden.to_string()];
        for (name, ens) in [("baseline", baseline_config(cfg)), ("ensemble", cfg.ensemble())] {
            let model = train_ensemble(&g, &ens, &hp, cfg.parallelism)?;
            let train_f1 = f1_on(&model, &g, &train)?;
            let test_f1 = f1_on(&model, &g, &test)?;
            let gap = overfit_gap(train_f1, test_f1);
            push_row(
                &mut long,
                cfg,
                vec![
                    hidden.to_string(),
                    name.to_string(),
                    ens.k.to_string(),
                    ens.alpha.to_string(),
                    ens.beta.to_string(),
                    cfg.reverse.to_string(),
                    fmt_f1(train_f1),
                    fmt_f1(test_f1),
                    fmt_f1(gap),
                ],
            )?;
            cells.extend([fmt_f1(train_f1), fmt_f1(test_f1), fmt_f1(gap)]);
        }
        layout.push(cells)?;
    }
    let csv = write_tables(&cfg.output_dir, "overfit", &long, &layout)?;
    println!("{}", csv.display());
    Ok(())
}

/// First `count` test nodes after a seeded shuffle.
pub fn pick_targets(g: &Graph, count: usize, seed: u64) -> Vec<usize> {
    let mut nodes = g.splits().test.clone();
    nodes.shuffle(&mut rng_from_seed(seed));
    nodes.truncate(count);
    nodes.sort_unstable();
    nodes
}

/// Clean versus attacked F1 of the baseline and the ensemble.
///
/// The random attack builds one perturbed graph shared by both models. The
/// greedy attack queries each model as its own victim with the same seed.
pub fn cmd_attack(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = load_graph(cfg)?;
    create_dir(&cfg.output_dir)?;
    let budget = AttackBudget::for_graph(cfg.budget, &g)?;
    let attack_seed = cfg.master_seed ^ 0xa77a_c4ed;

    let mut long = header(
        cfg,
        &["model", "k", "alpha", "beta", "attack", "budget", "flips", "f1_clean", "f1_attacked", "drop"],
    );
    let mut layout = ReportTable::new(["model", "clean", "attacked", "drop"]);

    let eval_nodes = match cfg.attack {
        AttackKind::Random => g.splits().test.clone(),
        AttackKind::Greedy => pick_targets(&g, cfg.targets, attack_seed),
    };
    let truth = g.labels_of(&eval_nodes)?;
    let shared = match cfg.attack {
        AttackKind::Random => Some(random_flip_attack(&g, budget, attack_seed)),
        AttackKind::Greedy => None,
    };

    for (name, ens) in [("baseline", baseline_config(cfg)), ("ensemble", cfg.ensemble())] {
        let model = train_ensemble(&g, &ens, &cfg.hyper, cfg.parallelism)?;
        let attacked = match &shared {
            Some(a) => a.clone(),
            None => {
                let victim = |graph: &Graph| {
                    let stack = model.posteriors(graph, &eval_nodes)?;
                    graph_forest::ensemble::discriminant(&stack, &model.weights)
                };
                let greedy = GreedyConfig {
                    budget,
                    pool_size: cfg.pool,
                    seed: attack_seed,
                    parallelism: cfg.parallelism,
                };
                greedy_confidence_attack(&g, victim, &eval_nodes, greedy)?
            }
        };
        let decider = |graph: &Graph, nodes: &[usize]| model.predict(graph, nodes);
        let r = robustness_eval(decider, &g, &attacked, &eval_nodes, &truth)?;
        push_row(
            &mut long,
            cfg,
            vec![
                name.to_string(),
                ens.k.to_string(),
                ens.alpha.to_string(),
                ens.beta.to_string(),
                cfg.attack.to_string(),
                cfg.budget.to_string(),
                edge_edit_distance(&g, &attacked).to_string(),
                fmt_f1(r.f1_clean),
                fmt_f1(r.f1_attacked),
                fmt_f1(r.drop),
            ],
        )?;
        layout.push([name.to_string(), fmt_f1(r.f1_clean), fmt_f1(r.f1_attacked), fmt_f1(r.drop)])?;
    }
    let csv = write_tables(&cfg.output_dir, "attack", &long, &layout)?;
    println!("{}", csv.display());
    Ok(())
}

/// Renders a CSV report as a Markdown table on stdout.
pub fn cmd_report(input: &Path) -> Result<(), CliError> {
    let table = load_report(input)?;
    print!("{}", table.to_markdown());
    Ok(())
}
