use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "sbm:n=90,s=3,d=12,p_in=0.2,p_out=0.02,train_fraction=0.3,seed=3";

fn run(args: &[&str], out: &Path) -> Output {
    run_sized(args, "3", out)
}

fn run_sized(args: &[&str], k: &str, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graph-forest"))
        .args(args)
        .args(["--dataset", TINY, "--k", k, "--epochs", "15", "--hidden", "8", "--layers", "2", "--out"])
        .arg(out)
        .env_remove(graph_forest_cli::THREADS_ENV)
        .output()
        .unwrap()
}

#[test]
fn train_writes_model_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("test micro-F1"));
    let model = graph_forest::ensemble::EnsembleModel::load(&dir.path().join("model.bin")).unwrap();
    assert_eq!(model.k(), 3);
    let log = graph_forest::dataset::load_report(&dir.path().join("train_log.csv")).unwrap();
    assert_eq!(log.rows.len(), 3);
    assert!(log.column("train_f1").is_some() && log.column("master_seed").is_some());
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&["train", "--seed", "5"], a.path()).status.success());
    assert!(run(&["train", "--seed", "5", "--parallelism", "3"], b.path()).status.success());
    let read = |d: &Path| std::fs::read(d.join("model.bin")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["train", "--alpha", "0"][..], &["train", "--voting", "loud"], &["sweep", "--betas", "1.5"], &["train", "--bogus"]] {
        let out = run(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn missing_dataset_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_graph-forest"))
        .args(["train", "--dataset"])
        .arg(dir.path().join("nowhere"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_cell_sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--alphas", "0.7", "--betas", "0.5"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("sweep.csv");
    let table = graph_forest::dataset::load_report(&csv).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.column("model").unwrap(), vec!["baseline", "ensemble"]);
    assert!(dir.path().join("sweep.md").exists());

    let report = Command::new(env!("CARGO_BIN_EXE_graph-forest"))
        .arg("report")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(report.status.success());
    let md = String::from_utf8_lossy(&report.stdout);
    assert!(md.starts_with("| model |") && md.lines().count() == 4, "{md}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("exp.conf");
    std::fs::write(&conf, "k = 2\nseed = 8\n").unwrap();
    let out = run_sized(&["train", "--config", conf.to_str().unwrap()], "4", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("k=4") && stdout.contains("seed=8"), "{stdout}");
}
