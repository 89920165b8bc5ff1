use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use alge_core::gnn::{self, LabeledGraph, ModelDims, PredictorParams, TrainConfig};
use alge_core::graph::{generate_ba, generate_er, load_edge_list, node_features_with, Graph};
use alge_core::imp::{overlap_report, select_seeds};
use alge_core::metrics::{curve_to_csv, disputation, infected_ratio_curve, kendall_tau_scores, mse_values};
use alge_core::rankers::{rank_by, Method, RankTable};
use alge_core::rng::derive_seed;
use alge_core::sampler::{sample_representatives, RepresentativeSet};
use alge_core::sir::{default_beta, simulate_influence, simulate_multi_seed, InfluenceTable, SirConfig};

use crate::config::{Beta, GraphSource, RunConfig};
use crate::{CliError, InputContext};

type Result<T> = std::result::Result<T, CliError>;

const CORPUS_TAG: u64 = 0x434f_5250_5553; // "CORPUS"

/// Resolved config plus its hash, shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub hash: String,
}

impl Context {
    pub fn new(config: RunConfig) -> Self {
        let hash = config.hash();
        Context { config, hash }
    }

    fn header(&self, command: &str) -> String {
        format!("# alge {command} config={}\n", self.hash)
    }

    fn emit(&self, command: &str, path: &Path, body: &str) -> Result<()> {
        write_atomic(path, &format!("{}{body}", self.header(command)))
    }

    /// Writes the resolved config as `<path>.config`.
    fn echo_config(&self, command: &str, path: &Path) -> Result<()> {
        let mut name = path.as_os_str().to_owned();
        name.push(".config");
        self.emit(command, Path::new(&name), &self.config.resolved())
    }

    fn sir(&self, g: &Graph, master_seed: u64) -> Result<SirConfig> {
        Ok(SirConfig::new(beta_for(&self.config, g)?, self.config.runs, master_seed))
    }

    fn pretrain_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.config.pretrain_lr,
            epochs: self.config.pretrain_epochs,
            seed: self.config.train_seed,
            ..TrainConfig::pretrain()
        }
    }

    fn finetune_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.config.finetune_lr,
            epochs: self.config.finetune_epochs,
            seed: self.config.train_seed,
            ..TrainConfig::finetune()
        }
    }

    fn dims(&self) -> ModelDims {
        ModelDims {
            input: self.config.features.len(),
            heads: self.config.heads,
            hidden_per_head: self.config.hidden_per_head,
            layers: self.config.attention_layers,
            fc_hidden: self.config.fc_hidden,
        }
    }
}

/// Temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn beta_for(cfg: &RunConfig, g: &Graph) -> Result<f64> {
    Ok(match cfg.beta {
        Beta::Fixed(b) => b,
        Beta::Auto => default_beta(g, cfg.beta_multiplier)?,
    })
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    load_edge_list(&read(path)?).in_file(path)
}

/// Builds or loads a graph. Generated graphs go through the edge-list text
/// so their ids match what a reload of the written file gives.
pub fn graph_from(source: &GraphSource) -> Result<Graph> {
    let g = match *source {
        GraphSource::File(ref path) => return load_graph(path),
        GraphSource::Ba { n, m, seed } => generate_ba(n, m, seed)?,
        GraphSource::Er { n, m, seed } => generate_er(n, m, seed)?,
    };
    canonical(&g)
}

fn canonical(g: &Graph) -> Result<Graph> {
    if g.edge_count() == 0 {
        return Ok(g.clone());
    }
    // isolated nodes do not survive an edge list, so they are dropped here too
    Ok(load_edge_list(&g.to_edge_list())?)
}

/// Generator spec of corpus graph `i`: BA with `m` cycling through 2, 3, 4
/// on even indices, ER with the matching edge count on odd ones.
pub fn corpus_source(cfg: &RunConfig, i: usize) -> GraphSource {
    let span = (cfg.corpus_max_n - cfg.corpus_min_n + 1) as u64;
    let n = cfg.corpus_min_n + (derive_seed(cfg.corpus_seed, CORPUS_TAG, i as u64, 0) % span) as usize;
    let seed = derive_seed(cfg.corpus_seed, CORPUS_TAG, i as u64, 1);
    let m = [2, 3, 4][(i / 2) % 3].min(n - 1);
    if i % 2 == 0 {
        GraphSource::Ba { n, m, seed }
    } else {
        let edges = m * (m + 1) / 2 + m * (n - m - 1);
        GraphSource::Er {
            n,
            m: edges.min(n * (n - 1) / 2),
            seed,
        }
    }
}

/// Seed for the SIR labels of corpus graph `i`.
pub fn corpus_label_seed(cfg: &RunConfig, i: usize) -> u64 {
    derive_seed(cfg.master_seed, CORPUS_TAG, i as u64, 2)
}

pub fn cmd_generate(ctx: &Context, source: &GraphSource, out: &Path) -> Result<()> {
    if matches!(source, GraphSource::File(_)) {
        return Err(CliError::usage("generate needs a generator spec such as \"ba n=200 m=3 seed=7\""));
    }
    let g = graph_from(source)?;
    let body = format!("# {source}\n# nodes={} edges={}\n{}", g.node_count(), g.edge_count(), g.to_edge_list());
    ctx.emit("generate", out, &body)
}

fn read_nodes(path: &Path) -> Result<Vec<usize>> {
    Ok(RepresentativeSet::from_csv(&read(path)?).in_file(path)?.nodes)
}

pub fn cmd_simulate(ctx: &Context, graph: &Path, nodes: Option<&Path>, out: &Path) -> Result<()> {
    let g = load_graph(graph)?;
    let nodes = nodes.map(read_nodes).transpose()?;
    let cfg = ctx.sir(&g, ctx.config.master_seed)?;
    log::info!("simulating {} runs per node at beta {}", cfg.runs, cfg.beta);
    let table = simulate_influence(&g, &cfg, nodes.as_deref())?;
    ctx.emit("simulate", out, &table.to_csv())?;
    ctx.echo_config("simulate", out)
}

/// Pairs every `<name>.edges` in `dir` with `<name>.influence.csv`.
fn read_corpus(dir: &Path) -> Result<Vec<(Graph, InfluenceTable)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "edges"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::usage(format!("{}: no .edges files", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let labels = p.with_extension("influence.csv");
            let g = load_graph(&p)?;
            let t = InfluenceTable::from_csv(&read(&labels)?).in_file(&labels)?;
            Ok((g, t))
        })
        .collect()
}

/// Pretrains on `(graph, labels)` pairs and returns the trained params.
pub fn pretrain_on(ctx: &Context, corpus: &[(Graph, InfluenceTable)]) -> Result<PredictorParams> {
    let features: Vec<_> = corpus
        .iter()
        .map(|(g, _)| node_features_with(g, &ctx.config.features))
        .collect::<alge_core::Result<_>>()?;
    let labels: Vec<_> = corpus
        .iter()
        .map(|(g, t)| gnn::fraction_labels(t, g.node_count()))
        .collect();
    let batch: Vec<LabeledGraph<'_>> = corpus
        .iter()
        .zip(&features)
        .zip(&labels)
        .map(|(((g, _), x), l)| LabeledGraph {
            graph: g,
            features: x,
            labels: l,
        })
        .collect();
    let init = PredictorParams::init(ctx.dims(), ctx.config.features.clone(), ctx.config.train_seed)?;
    let report = gnn::pretrain(init, &batch, &ctx.pretrain_config())?;
    log::info!("pretrain loss {:.4e} -> {:.4e}", report.initial_loss, report.final_loss);
    Ok(report.params)
}

pub fn cmd_pretrain(ctx: &Context, corpus_dir: &Path, out: &Path) -> Result<()> {
    let corpus = read_corpus(corpus_dir)?;
    let params = pretrain_on(ctx, &corpus)?;
    ctx.emit("pretrain", out, &params.to_text())?;
    ctx.echo_config("pretrain", out)
}

fn representatives(ctx: &Context, g: &Graph) -> Result<RepresentativeSet> {
    let cap = ctx.config.max_labels.resolve(g.node_count());
    let (network, reps) = sample_representatives(g, ctx.config.eps, ctx.config.tol, cap)?;
    log::info!(
        "correlation threshold {:.6}, {} representatives",
        network.threshold,
        reps.len()
    );
    Ok(reps)
}

pub fn cmd_sample(ctx: &Context, graph: &Path, out: &Path) -> Result<()> {
    let g = load_graph(graph)?;
    let reps = representatives(ctx, &g)?;
    ctx.emit("sample", out, &reps.to_csv())?;
    ctx.echo_config("sample", out)
}

fn read_params(path: &Path) -> Result<PredictorParams> {
    PredictorParams::from_text(&read(path)?).in_file(path)
}

fn read_table(path: &Path) -> Result<InfluenceTable> {
    InfluenceTable::from_csv(&read(path)?).in_file(path)
}

pub fn finetune_on(ctx: &Context, params: &PredictorParams, g: &Graph, labels: &InfluenceTable) -> Result<PredictorParams> {
    let x = node_features_with(g, &params.features)?;
    let l = gnn::fraction_labels(labels, g.node_count());
    let target = LabeledGraph {
        graph: g,
        features: &x,
        labels: &l,
    };
    let report = gnn::finetune(params, target, &ctx.finetune_config())?;
    log::info!("finetune loss {:.4e} -> {:.4e}", report.initial_loss, report.final_loss);
    Ok(report.params)
}

pub fn cmd_finetune(ctx: &Context, graph: &Path, params: &Path, labels: &Path, out: &Path) -> Result<()> {
    let g = load_graph(graph)?;
    let p = read_params(params)?;
    let t = read_table(labels)?;
    let tuned = finetune_on(ctx, &p, &g, &t)?;
    ctx.emit("finetune", out, &tuned.to_text())?;
    ctx.echo_config("finetune", out)
}

pub fn predict_with(ctx: &Context, params: &PredictorParams, g: &Graph) -> Result<InfluenceTable> {
    let x = node_features_with(g, &params.features)?;
    Ok(gnn::predict_influence(params, g, &x, beta_for(&ctx.config, g)?)?)
}

pub fn cmd_predict(ctx: &Context, graph: &Path, params: &Path, out: &Path) -> Result<()> {
    let g = load_graph(graph)?;
    let p = read_params(params)?;
    let table = predict_with(ctx, &p, &g)?;
    ctx.emit("predict", out, &table.to_csv())?;
    ctx.echo_config("predict", out)
}

/// Greedy seeds from `influence`, their multi-seed spreading curve and the
/// overlap report against `individual`.
fn imp_outputs(
    ctx: &Context,
    command: &str,
    g: &Graph,
    influence: &InfluenceTable,
    individual: &InfluenceTable,
    dir: &Path,
) -> Result<()> {
    let k = ctx.config.k.min(g.node_count());
    let selection = select_seeds(g, influence, k)?;
    let seeds = selection.nodes();
    let cfg = ctx.sir(g, ctx.config.master_seed)?;
    let outcome = simulate_multi_seed(g, &seeds, &cfg)?;
    let report = overlap_report(g, &seeds, individual, &outcome)?;
    log::info!(
        "{} seeds, mean final size {:.2}",
        seeds.len(),
        outcome.mean_final()
    );
    ctx.emit(command, &dir.join("seeds.csv"), &selection.to_csv())?;
    ctx.emit(
        command,
        &dir.join("curve.csv"),
        &curve_to_csv(&infected_ratio_curve(&outcome, g.node_count())),
    )?;
    ctx.emit(command, &dir.join("overlap.csv"), &report.to_csv())
}

pub fn cmd_imp(ctx: &Context, graph: &Path, influence: &Path, out_dir: &Path) -> Result<()> {
    let g = load_graph(graph)?;
    let table = read_table(influence)?;
    imp_outputs(ctx, "imp", &g, &table, &table, out_dir)?;
    ctx.echo_config("imp", &out_dir.join("imp"))
}

/// `method,kendall_tau,mse` rows; `mse` is empty for rank-only methods.
fn metrics_csv(rows: &[(String, f64, Option<f64>)]) -> String {
    let mut out = String::from("method,kendall_tau,mse\n");
    for (name, tau, mse) in rows {
        let mse = mse.map(|m| m.to_string()).unwrap_or_default();
        out.push_str(&format!("{name},{tau},{mse}\n"));
    }
    out
}

fn dense(table: &InfluenceTable, n: usize, path: &Path) -> Result<Vec<f64>> {
    Ok(table.dense(n).in_file(path)?.to_vec())
}

pub fn cmd_evaluate(ctx: &Context, pred: &Path, truth: &Path, panel_dir: Option<&Path>, out_dir: &Path) -> Result<()> {
    let p = read_table(pred)?;
    let t = read_table(truth)?;
    let n = t.len();
    let pv = dense(&p, n, pred)?;
    let tv = dense(&t, n, truth)?;
    let mut rows = vec![("prediction".to_owned(), kendall_tau_scores(&tv, &pv)?, Some(mse_values(&pv, &tv)?))];
    if let Some(dir) = panel_dir {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        let panel: Vec<RankTable> = paths
            .iter()
            .map(|p| RankTable::from_csv(&read(p)?).in_file(p))
            .collect::<Result<_>>()?;
        for table in &panel {
            rows.push((table.method.to_string(), kendall_tau_scores(&tv, &table.scores)?, None));
        }
        let truth_ranks = RankTable::from_scores(Method::Truth, tv.clone());
        let d = disputation(&panel, &truth_ranks, ctx.config.exclude_worst)?;
        let names: Vec<String> = panel.iter().map(|t| t.method.to_string()).collect();
        ctx.emit("evaluate", &out_dir.join("disputation.csv"), &d.to_csv(&names))?;
    }
    ctx.emit("evaluate", &out_dir.join("metrics.csv"), &metrics_csv(&rows))?;
    ctx.echo_config("evaluate", &out_dir.join("evaluate"))
}

/// Runs every stage for the configured target and writes all artifacts to
/// `output_dir`.
pub fn cmd_pipeline(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let out = cfg.output_dir.as_path();
    let emit = |name: &str, body: &str| ctx.emit("pipeline", &out.join(name), body);
    emit("config.resolved", &cfg.resolved())?;

    log::info!("building corpus of {} graphs", cfg.corpus_size);
    let mut corpus = Vec::with_capacity(cfg.corpus_size);
    for i in 0..cfg.corpus_size {
        let source = corpus_source(cfg, i);
        let g = graph_from(&source)?;
        let labels = simulate_influence(&g, &ctx.sir(&g, corpus_label_seed(cfg, i))?, None)?;
        emit(&format!("corpus/g{i:03}.edges"), &format!("# {source}\n{}", g.to_edge_list()))?;
        emit(&format!("corpus/g{i:03}.influence.csv"), &labels.to_csv())?;
        corpus.push((g, labels));
    }
    let params_b = pretrain_on(ctx, &corpus)?;
    emit("params_b.txt", &params_b.to_text())?;

    let g = graph_from(&cfg.target)?;
    let n = g.node_count();
    emit("target.edges", &format!("# {}\n{}", cfg.target, g.to_edge_list()))?;
    let reps = representatives(ctx, &g)?;
    emit("representatives.csv", &reps.to_csv())?;
    let sir = ctx.sir(&g, cfg.master_seed)?;
    let rep_labels = simulate_influence(&g, &sir, Some(&reps.nodes))?;
    emit("representative_labels.csv", &rep_labels.to_csv())?;
    let params_c = finetune_on(ctx, &params_b, &g, &rep_labels)?;
    emit("params_c.txt", &params_c.to_text())?;

    let pred_b = predict_with(ctx, &params_b, &g)?;
    let pred_c = predict_with(ctx, &params_c, &g)?;
    emit("predicted_b.csv", &pred_b.to_csv())?;
    emit("predicted_c.csv", &pred_c.to_csv())?;

    log::info!("simulating true influence of {n} nodes");
    let truth = simulate_influence(&g, &sir, None)?;
    emit("truth.csv", &truth.to_csv())?;

    imp_outputs(ctx, "pipeline", &g, &pred_c, &truth, &out.join("imp"))?;

    let tv = &truth.values;
    let mut labeled = vec![false; n];
    for &v in &reps.nodes {
        labeled[v] = true;
    }
    let unlabeled = |vals: &[f64]| -> Vec<f64> { (0..n).filter(|&v| !labeled[v]).map(|v| vals[v]).collect() };
    let mut rows = Vec::new();
    let mut panel = Vec::new();
    for method in &cfg.panel {
        let table = match method {
            Method::Other(name) if name == "alge-b" => RankTable::from_scores(method.clone(), pred_b.values.clone()),
            Method::Other(name) if name == "alge-c" => RankTable::from_scores(method.clone(), pred_c.values.clone()),
            _ => rank_by(&g, method)?,
        };
        emit(&format!("ranks/{method}.csv"), &table.to_csv())?;
        panel.push(table);
    }
    for (name, pred) in [("alge-b", &pred_b), ("alge-c", &pred_c)] {
        rows.push((name.to_owned(), kendall_tau_scores(tv, &pred.values)?, Some(mse_values(&pred.values, tv)?)));
        if reps.len() < n {
            rows.push((
                format!("{name}-unlabeled"),
                kendall_tau_scores(&unlabeled(tv), &unlabeled(&pred.values))?,
                Some(mse_values(&unlabeled(&pred.values), &unlabeled(tv))?),
            ));
        }
    }
    for table in panel.iter().filter(|t| !matches!(t.method, Method::Other(_))) {
        rows.push((table.method.to_string(), kendall_tau_scores(tv, &table.scores)?, None));
    }
    emit("metrics.csv", &metrics_csv(&rows))?;
    let truth_ranks = RankTable::from_scores(Method::Truth, tv.clone());
    let d = disputation(&panel, &truth_ranks, cfg.exclude_worst)?;
    let names: Vec<String> = cfg.panel.iter().map(|m| m.to_string()).collect();
    emit("disputation.csv", &d.to_csv(&names))?;
    Ok(())
}
