use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use alge_core::graph::load_edge_list;
use alge_core::sir::{exact_influence_moments, InfluenceTable};

fn alge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alge"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = alge(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn generate_writes_documented_edge_count_and_repeats_identically() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "ba n=200 m=3 seed=7", "-o", "a.edges"]);
    ok(dir.path(), &["generate", "ba n=200 m=3 seed=7", "-o", "b.edges"]);
    let a = read(dir.path(), "a.edges");
    assert_eq!(a, read(dir.path(), "b.edges"));
    assert!(a.starts_with("# alge generate config="));
    let g = load_edge_list(&a).unwrap();
    assert_eq!((g.node_count(), g.edge_count()), (200, 3 * 4 / 2 + 3 * (200 - 4)));

    ok(dir.path(), &["generate", "er n=10 m=0 seed=1", "-o", "empty.edges"]);
    let empty = read(dir.path(), "empty.edges");
    assert!(empty.lines().all(|l| l.starts_with('#')), "{empty}");
}

#[test]
fn simulate_beta_zero_gives_unit_influence() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "ba n=30 m=2 seed=3", "-o", "g.edges"]);
    ok(dir.path(), &["--set", "beta=0", "--set", "runs=20", "simulate", "g.edges", "-o", "inf.csv"]);
    let table = InfluenceTable::from_csv(&read(dir.path(), "inf.csv")).unwrap();
    assert_eq!(table.len(), 30);
    assert!(table.values.iter().all(|&v| v == 1.0));
    assert!(read(dir.path(), "inf.csv.config").contains("beta = 0.0"));
}

#[test]
fn simulate_matches_oracle_and_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.edges"), "0 1\n1 2\n2 3\n3 0\n0 2\n3 4\n").unwrap();
    let args = |workers: &'static str, out: &'static str| {
        ["--workers", workers, "--set", "beta=0.4", "--set", "runs=20000", "simulate", "g.edges", "-o", out]
    };
    ok(dir.path(), &args("1", "one.csv"));
    ok(dir.path(), &args("3", "three.csv"));
    let one = read(dir.path(), "one.csv");
    assert_eq!(one, read(dir.path(), "three.csv"));

    let g = load_edge_list(&read(dir.path(), "g.edges")).unwrap();
    let table = InfluenceTable::from_csv(&one).unwrap();
    for v in 0..g.node_count() {
        let (m1, m2) = exact_influence_moments(&g, v, 0.4).unwrap();
        let se = ((m2 - m1 * m1) / 20000.0).sqrt();
        assert!((table.values[v] - m1).abs() <= 3.0 * se, "node {v}: {} vs {m1}", table.values[v]);
    }
}

#[test]
fn stepwise_commands_compose() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.conf"),
        "runs = 100\npretrain_epochs = 3\nfinetune_epochs = 3\nk = 4\nmax_labels = 20%\n",
    )
    .unwrap();
    let c = ["-c", "run.conf"];
    let with = |rest: &[&str]| -> Vec<String> { c.iter().chain(rest).map(|s| s.to_string()).collect() };
    let run = |rest: &[&str]| {
        let args = with(rest);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(d, &refs);
    };
    fs::create_dir(d.join("corpus")).unwrap();
    run(&["generate", "ba n=40 m=2 seed=1", "-o", "corpus/a.edges"]);
    run(&["generate", "er n=40 m=80 seed=2", "-o", "corpus/b.edges"]);
    run(&["simulate", "corpus/a.edges", "-o", "corpus/a.influence.csv"]);
    run(&["simulate", "corpus/b.edges", "-o", "corpus/b.influence.csv"]);
    run(&["pretrain", "corpus", "-o", "b.params"]);
    run(&["generate", "ba n=60 m=3 seed=9", "-o", "target.edges"]);
    run(&["sample", "target.edges", "-o", "reps.csv"]);
    run(&["simulate", "target.edges", "--nodes", "reps.csv", "-o", "labels.csv"]);
    run(&["finetune", "target.edges", "b.params", "labels.csv", "-o", "c.params"]);
    run(&["predict", "target.edges", "c.params", "-o", "pred.csv"]);
    run(&["simulate", "target.edges", "-o", "truth.csv"]);
    run(&["imp", "target.edges", "pred.csv", "-o", "imp"]);
    run(&["evaluate", "pred.csv", "truth.csv", "-o", "eval"]);

    let labels = InfluenceTable::from_csv(&read(d, "labels.csv")).unwrap();
    assert!(!labels.is_empty() && labels.len() <= 12);
    let seeds = read(d, "imp/seeds.csv");
    assert!(seeds.lines().nth(1).unwrap().starts_with("order,node_id"));
    assert_eq!(seeds.lines().count(), 2 + 4);
    let metrics = read(d, "eval/metrics.csv");
    assert!(metrics.contains("\nprediction,"));
    let hash = read(d, "pred.csv").lines().next().unwrap().to_owned();
    for f in ["reps.csv", "labels.csv", "c.params", "imp/overlap.csv", "imp/curve.csv", "eval/metrics.csv"] {
        let first = read(d, f).lines().next().unwrap().to_owned();
        assert!(first.starts_with("# alge "), "{f}: {first}");
        assert_eq!(first.split("config=").nth(1), hash.split("config=").nth(1), "{f}");
    }
}

#[test]
fn evaluate_with_panel_writes_disputation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::create_dir(d.join("panel")).unwrap();
    fs::write(d.join("truth.csv"), "node_id,influence,beta,runs\n0,3.5,0.3,10\n1,1.2,0.3,10\n2,2.0,0.3,10\n").unwrap();
    fs::write(d.join("pred.csv"), "node_id,influence,beta,runs\n0,3.0,0.3,0\n1,2.2,0.3,0\n2,1.0,0.3,0\n").unwrap();
    fs::write(d.join("panel/deg.csv"), "node_id,rank,score,method\n0,1,2,degree\n1,3,1,degree\n2,2,1.5,degree\n").unwrap();
    fs::write(d.join("panel/ks.csv"), "node_id,rank,score,method\n0,2,1,kshell\n1,1,2,kshell\n2,3,0,kshell\n").unwrap();
    ok(d, &["evaluate", "pred.csv", "truth.csv", "--panel", "panel", "-o", "eval"]);
    let disp = read(d, "eval/disputation.csv");
    // errors per node: node 0 (0, 1), node 1 (0, 2), node 2 (0, 1); the larger one is dropped
    assert!(disp.contains("\n0,0,1,1,2\n") && disp.contains("\n1,0,3,3,1\n"), "{disp}");
    let metrics = read(d, "eval/metrics.csv");
    // tau: pairs (0,1) +, (0,2) +, (1,2) -; mse (0.25 + 1 + 1) / 3
    let row: Vec<&str> = metrics.lines().find(|l| l.starts_with("prediction,")).unwrap().split(',').collect();
    assert_eq!(row[1].parse::<f64>().unwrap(), 1.0 / 3.0);
    assert!((row[2].parse::<f64>().unwrap() - 0.75).abs() < 1e-15, "{metrics}");
    assert!(metrics.contains("\ndegree,1,\n"), "{metrics}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(alge(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(alge(d, &["--set", "rnus=5", "generate", "ba n=5 m=1 seed=1", "-o", "x"]).status.code(), Some(1));
    assert_eq!(alge(d, &["generate", "ws n=5 m=1 seed=1", "-o", "x"]).status.code(), Some(1));

    fs::write(d.join("bad.edges"), "0 1\n1 two\n").unwrap();
    let out = alge(d, &["simulate", "bad.edges", "-o", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.edges") && stderr.contains("line 2"), "{stderr}");
    assert!(!d.join("x.csv").exists());

    assert_eq!(alge(d, &["simulate", "missing.edges", "-o", "x.csv"]).status.code(), Some(2));
    fs::write(d.join("cycle.edges"), "0 1\n1 2\n2 0\n").unwrap();
    // every correlation entry is identical, so the sampler still succeeds
    assert_eq!(alge(d, &["sample", "cycle.edges", "-o", "r.csv"]).status.code(), Some(0));
    // two disjoint edges have no finite epidemic threshold
    fs::write(d.join("two.edges"), "0 1\n2 3\n").unwrap();
    assert_eq!(alge(d, &["simulate", "two.edges", "-o", "t.csv"]).status.code(), Some(2));
    assert_eq!(alge(d, &["--set", "beta=0.5", "simulate", "two.edges", "-o", "t.csv"]).status.code(), Some(0));
}
