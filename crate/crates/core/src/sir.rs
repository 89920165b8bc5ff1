//! Discrete-time SIR Monte Carlo with unit recovery.
//!
//! At every step each infected node tries once to infect each susceptible
//! neighbour with probability `beta`, then recovers. Because every edge is
//! tried at most once, the final recovered set of a run has the same law as
//! the cluster of the seed under bond percolation with bond probability
//! `beta`, which [`exact_influence_oracle`] enumerates exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{degree_stats, Graph};
use crate::rng::{self, MULTI_SEED, SINGLE_SEED};
use crate::table;

/// Recovery probability per step. Fixed.
pub const RECOVERY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirConfig {
    pub beta: f64,
    pub mu: f64,
    pub runs: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global rayon pool. Results do not depend on it.
    pub workers: usize,
}

impl SirConfig {
    pub fn new(beta: f64, runs: usize, master_seed: u64) -> Self {
        SirConfig {
            beta,
            mu: RECOVERY,
            runs,
            master_seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.mu != RECOVERY {
            return Err(Error::param(format!("mu must be 1, got {}", self.mu)));
        }
        if self.runs == 0 {
            return Err(Error::param("runs must be at least 1"));
        }
        Ok(())
    }

    fn install<R: Send>(&self, job: impl FnOnce() -> R + Send) -> Result<R> {
        if self.workers == 0 {
            return Ok(job());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::param(format!("thread pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// `<k> / (<k^2> - <k>)`, the heterogeneous mean-field threshold.
pub fn epidemic_threshold(g: &Graph) -> Result<f64> {
    let (k, k2) = degree_stats(g)?;
    if k2 <= k {
        return Err(Error::Degenerate(format!(
            "epidemic threshold undefined: <k^2> = {k2} <= <k> = {k}"
        )));
    }
    Ok(k / (k2 - k))
}

/// `multiplier * beta_c`, clamped to 1.
pub fn default_beta(g: &Graph, multiplier: f64) -> Result<f64> {
    let beta = multiplier * epidemic_threshold(g)?;
    if beta > 1.0 {
        log::warn!("infection probability {beta} exceeds 1; clamping");
        return Ok(1.0);
    }
    Ok(beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Simulated,
    Predicted,
}

/// Influence per node (expected final recovered count).
///
/// Entries are sorted by node id. A table built for every node is
/// `complete`; partial tables come from subset simulations (label sets).
/// On disk: `node_id,influence,beta,runs`, with `runs = 0` marking
/// predicted values.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTable {
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub beta: f64,
    pub runs: usize,
}

impl InfluenceTable {
    pub fn predicted(values: Vec<f64>, beta: f64) -> Self {
        InfluenceTable {
            nodes: (0..values.len()).collect(),
            values,
            provenance: Provenance::Predicted,
            beta,
            runs: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, node: usize) -> Option<f64> {
        self.nodes
            .binary_search(&node)
            .ok()
            .map(|idx| self.values[idx])
    }

    pub fn is_complete(&self, n: usize) -> bool {
        self.nodes.len() == n && self.nodes.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Values indexed by node id; fails unless the table covers `0..n`.
    pub fn dense(&self, n: usize) -> Result<&[f64]> {
        if !self.is_complete(n) {
            return Err(Error::Shape(format!(
                "influence table covers {} nodes, graph has {n}",
                self.nodes.len()
            )));
        }
        Ok(&self.values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,influence,beta,runs\n");
        for (&v, &x) in self.nodes.iter().zip(&self.values) {
            out.push_str(&format!("{v},{x},{},{}\n", self.beta, self.runs));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = table::read_rows(text, &["node_id", "influence", "beta", "runs"])?;
        let mut entries = Vec::with_capacity(rows.len());
        let mut beta = f64::NAN;
        let mut runs = 0;
        for row in &rows {
            let node: usize = row.parse(0)?;
            let value: f64 = row.parse(1)?;
            beta = row.parse(2)?;
            runs = row.parse(3)?;
            if !(value >= 1.0) {
                return Err(Error::parse(row.line, format!("influence {value} below 1")));
            }
            entries.push((node, value));
        }
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::parse(0, "duplicate node id in influence table"));
        }
        Ok(InfluenceTable {
            nodes: entries.iter().map(|e| e.0).collect(),
            values: entries.iter().map(|e| e.1).collect(),
            provenance: if runs == 0 {
                Provenance::Predicted
            } else {
                Provenance::Simulated
            },
            beta,
            runs,
        })
    }
}

/// Sample statistics of the final size over the runs of one seed node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub mean: f64,
    /// Unbiased sample variance of the final size.
    pub variance: f64,
    pub runs: usize,
}

impl RunStats {
    pub fn std_error(&self) -> f64 {
        (self.variance / self.runs as f64).sqrt()
    }
}

/// Reusable per-thread buffers; `mark` uses epoch stamps so it never needs clearing.
struct Workspace {
    mark: Vec<u32>,
    epoch: u32,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            mark: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }
}

fn single_seed_run(g: &Graph, source: usize, beta: f64, rng: &mut ChaCha8Rng, ws: &mut Workspace) -> usize {
    ws.reset();
    let epoch = ws.epoch;
    ws.frontier.clear();
    ws.frontier.push(source);
    ws.mark[source] = epoch;
    let mut recovered = 1;
    while !ws.frontier.is_empty() {
        ws.next.clear();
        for &u in &ws.frontier {
            for &v in g.neighbors(u) {
                if ws.mark[v] != epoch && rng.random::<f64>() < beta {
                    ws.mark[v] = epoch;
                    ws.next.push(v);
                }
            }
        }
        recovered += ws.next.len();
        std::mem::swap(&mut ws.frontier, &mut ws.next);
    }
    recovered
}

fn node_stats(g: &Graph, cfg: &SirConfig, source: usize, ws: &mut Workspace) -> RunStats {
    let mut sum = 0u64;
    let mut sum_sq = 0u128;
    for run in 0..cfg.runs {
        let mut rng = rng::stream(cfg.master_seed, SINGLE_SEED, source as u64, run as u64);
        let size = single_seed_run(g, source, cfg.beta, &mut rng, ws) as u64;
        sum += size;
        sum_sq += (size as u128) * (size as u128);
    }
    let r = cfg.runs as f64;
    let mean = sum as f64 / r;
    let variance = if cfg.runs > 1 {
        ((sum_sq as f64) - (sum as f64) * mean) / (r - 1.0)
    } else {
        0.0
    };
    RunStats {
        mean,
        variance: variance.max(0.0),
        runs: cfg.runs,
    }
}

/// Final-size statistics for one seed node.
pub fn simulate_node(g: &Graph, cfg: &SirConfig, source: usize) -> Result<RunStats> {
    cfg.validate()?;
    check_node(g, source)?;
    Ok(node_stats(g, cfg, source, &mut Workspace::new(g.node_count())))
}

/// Mean final size for every requested node (all nodes when `nodes` is `None`).
pub fn simulate_influence(g: &Graph, cfg: &SirConfig, nodes: Option<&[usize]>) -> Result<InfluenceTable> {
    Ok(simulate_influence_stats(g, cfg, nodes)?.0)
}

/// As [`simulate_influence`], also returning per-node run statistics.
pub fn simulate_influence_stats(
    g: &Graph,
    cfg: &SirConfig,
    nodes: Option<&[usize]>,
) -> Result<(InfluenceTable, Vec<RunStats>)> {
    cfg.validate()?;
    let mut targets: Vec<usize> = match nodes {
        Some(subset) => subset.to_vec(),
        None => (0..g.node_count()).collect(),
    };
    targets.sort_unstable();
    targets.dedup();
    for &v in &targets {
        check_node(g, v)?;
    }
    let n = g.node_count();
    let stats: Vec<RunStats> = cfg.install(|| {
        targets
            .par_iter()
            .map_init(|| Workspace::new(n), |ws, &v| node_stats(g, cfg, v, ws))
            .collect()
    })?;
    let table = InfluenceTable {
        nodes: targets,
        values: stats.iter().map(|s| s.mean).collect(),
        provenance: Provenance::Simulated,
        beta: cfg.beta,
        runs: cfg.runs,
    };
    Ok((table, stats))
}

fn check_node(g: &Graph, v: usize) -> Result<()> {
    if v >= g.node_count() {
        return Err(Error::param(format!("node {v} out of range")));
    }
    Ok(())
}

/// One multi-seed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiSeedRun {
    /// Newly infected per step; step 0 holds the seeds.
    pub new_per_step: Vec<usize>,
    /// Recovered nodes, ascending.
    pub recovered: Vec<usize>,
    /// Recovered nodes descending from each seed (seeds count themselves).
    pub attributed: Vec<usize>,
    /// Root seed index per recovered node, aligned with `recovered`.
    pub roots: Vec<usize>,
}

/// Run-averaged multi-seed outcome. Integer totals are kept so accounting
/// identities can be checked exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeedOutcome {
    pub seeds: Vec<usize>,
    pub runs: usize,
    pub new_per_step_total: Vec<u64>,
    pub recovered_total: u64,
    pub attributed_total: Vec<u64>,
    /// How many runs each node ended up recovered in.
    pub recovery_count: Vec<u64>,
}

impl MultiSeedOutcome {
    pub fn mean_final(&self) -> f64 {
        self.recovered_total as f64 / self.runs as f64
    }

    /// `IN_i`: mean number of recovered nodes attributed to seed `i`.
    pub fn mean_attributed(&self) -> Vec<f64> {
        self.attributed_total
            .iter()
            .map(|&t| t as f64 / self.runs as f64)
            .collect()
    }

    pub fn mean_new_per_step(&self) -> Vec<f64> {
        self.new_per_step_total
            .iter()
            .map(|&t| t as f64 / self.runs as f64)
            .collect()
    }
}

fn validate_seeds(g: &Graph, seeds: &[usize]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::param("seed set is empty"));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("seed set has duplicates"));
    }
    seeds.iter().try_for_each(|&s| check_node(g, s))
}

/// One run with every seed initially infected.
///
/// A node infected by several neighbours in the same step inherits the root
/// of one successful infector chosen uniformly (reservoir sampling over the
/// successes).
pub fn run_multi_seed(g: &Graph, seeds: &[usize], beta: f64, rng: &mut ChaCha8Rng) -> Result<MultiSeedRun> {
    validate_seeds(g, seeds)?;
    let n = g.node_count();
    const SUSCEPTIBLE: usize = usize::MAX;
    let mut root = vec![SUSCEPTIBLE; n];
    // successes this step, for nodes still susceptible at the start of the step
    let mut hits = vec![0u32; n];
    let mut candidate = vec![0usize; n];
    let mut frontier: Vec<usize> = seeds.to_vec();
    for (i, &s) in seeds.iter().enumerate() {
        root[s] = i;
    }
    let mut new_per_step = vec![seeds.len()];
    let mut touched = Vec::new();
    while !frontier.is_empty() {
        touched.clear();
        for &u in &frontier {
            for &v in g.neighbors(u) {
                if root[v] != SUSCEPTIBLE {
                    continue;
                }
                if rng.random::<f64>() < beta {
                    if hits[v] == 0 {
                        touched.push(v);
                    }
                    hits[v] += 1;
                    if rng.random_range(0..hits[v]) == 0 {
                        candidate[v] = root[u];
                    }
                }
            }
        }
        for &v in &touched {
            root[v] = candidate[v];
            hits[v] = 0;
        }
        if touched.is_empty() {
            break;
        }
        new_per_step.push(touched.len());
        std::mem::swap(&mut frontier, &mut touched);
    }
    let mut attributed = vec![0; seeds.len()];
    let mut recovered = Vec::new();
    let mut roots = Vec::new();
    for (v, &r) in root.iter().enumerate() {
        if r != SUSCEPTIBLE {
            attributed[r] += 1;
            recovered.push(v);
            roots.push(r);
        }
    }
    Ok(MultiSeedRun {
        new_per_step,
        recovered,
        attributed,
        roots,
    })
}

/// Averages [`run_multi_seed`] over `cfg.runs` independent runs.
pub fn simulate_multi_seed(g: &Graph, seeds: &[usize], cfg: &SirConfig) -> Result<MultiSeedOutcome> {
    cfg.validate()?;
    validate_seeds(g, seeds)?;
    let n = g.node_count();
    let k = seeds.len();
    let empty = || MultiSeedOutcome {
        seeds: seeds.to_vec(),
        runs: 0,
        new_per_step_total: Vec::new(),
        recovered_total: 0,
        attributed_total: vec![0; k],
        recovery_count: vec![0; n],
    };
    let merged = cfg.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| {
                let mut rng = rng::stream(cfg.master_seed, MULTI_SEED, 0, run as u64);
                let one = run_multi_seed(g, seeds, cfg.beta, &mut rng).expect("seeds validated");
                let mut acc = empty();
                acc.runs = 1;
                acc.new_per_step_total = one.new_per_step.iter().map(|&c| c as u64).collect();
                acc.recovered_total = one.recovered.len() as u64;
                acc.attributed_total = one.attributed.iter().map(|&c| c as u64).collect();
                for &v in &one.recovered {
                    acc.recovery_count[v] += 1;
                }
                acc
            })
            .reduce(empty, merge_outcomes)
    })?;
    Ok(merged)
}

// integer sums only, so the reduction order cannot change the result
fn merge_outcomes(mut a: MultiSeedOutcome, b: MultiSeedOutcome) -> MultiSeedOutcome {
    a.runs += b.runs;
    if a.new_per_step_total.len() < b.new_per_step_total.len() {
        a.new_per_step_total.resize(b.new_per_step_total.len(), 0);
    }
    for (x, y) in a.new_per_step_total.iter_mut().zip(&b.new_per_step_total) {
        *x += y;
    }
    a.recovered_total += b.recovered_total;
    for (x, y) in a.attributed_total.iter_mut().zip(&b.attributed_total) {
        *x += y;
    }
    for (x, y) in a.recovery_count.iter_mut().zip(&b.recovery_count) {
        *x += y;
    }
    a
}

/// Largest edge count accepted by the exact oracle.
pub const ORACLE_MAX_EDGES: usize = 20;

/// Exact first and second moments of the seed's cluster size under bond
/// percolation, by enumerating all `2^m` bond configurations.
pub fn exact_influence_moments(g: &Graph, source: usize, beta: f64) -> Result<(f64, f64)> {
    let m = g.edge_count();
    if m > ORACLE_MAX_EDGES {
        return Err(Error::param(format!(
            "exact oracle limited to {ORACLE_MAX_EDGES} edges, graph has {m}"
        )));
    }
    check_node(g, source)?;
    let n = g.node_count();
    let edges = g.edges();
    let mut first = 0.0;
    let mut second = 0.0;
    let mut reached = vec![false; n];
    let mut stack = Vec::with_capacity(n);
    for mask in 0u32..(1u32 << m) {
        let open = mask.count_ones() as i32;
        let weight = beta.powi(open) * (1.0 - beta).powi(m as i32 - open);
        if weight == 0.0 {
            continue;
        }
        reached.iter_mut().for_each(|r| *r = false);
        reached[source] = true;
        stack.push(source);
        let mut size = 1usize;
        while let Some(u) = stack.pop() {
            for (e, &(a, b)) in edges.iter().enumerate() {
                if mask & (1 << e) == 0 {
                    continue;
                }
                let other = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if !reached[other] {
                    reached[other] = true;
                    size += 1;
                    stack.push(other);
                }
            }
        }
        first += weight * size as f64;
        second += weight * (size * size) as f64;
    }
    Ok((first, second))
}

/// Exact expected influence of `source` (bond-percolation cluster size).
pub fn exact_influence_oracle(g: &Graph, source: usize, beta: f64) -> Result<f64> {
    Ok(exact_influence_moments(g, source, beta)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert!((epidemic_threshold(&cycle(6)).unwrap() - 1.0).abs() < 1e-15);
        // star with 5 leaves: 2 / (5 - 1)
        assert!((epidemic_threshold(&star(5)).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            epidemic_threshold(&path(2)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn default_beta_clamps() {
        // cycle: beta_c = 1, so 1.5 * beta_c clamps to 1
        assert_eq!(default_beta(&cycle(5), 1.5).unwrap(), 1.0);
        assert!((default_beta(&star(9), 1.5).unwrap() - 1.5 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(SirConfig::new(1.2, 10, 0).validate().is_err());
        assert!(SirConfig::new(0.2, 0, 0).validate().is_err());
        let mut cfg = SirConfig::new(0.2, 10, 0);
        cfg.mu = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_edge_estimate() {
        let g = path(2);
        let beta = 0.3;
        let cfg = SirConfig::new(beta, 20_000, 11);
        let stats = simulate_node(&g, &cfg, 0).unwrap();
        let tol = 3.0 * (beta * (1.0 - beta) / cfg.runs as f64).sqrt();
        assert!((stats.mean - (1.0 + beta)).abs() < tol, "{}", stats.mean);
    }

    #[test]
    fn star_hub_estimate() {
        let g = star(6);
        let beta = 0.4;
        let cfg = SirConfig::new(beta, 20_000, 3);
        let stats = simulate_node(&g, &cfg, 0).unwrap();
        let sd = (6.0 * beta * (1.0 - beta) / cfg.runs as f64).sqrt();
        assert!((stats.mean - (1.0 + 6.0 * beta)).abs() < 3.0 * sd, "{} vs {}", stats.mean, 1.0 + 6.0 * beta);
    }

    #[test]
    fn extreme_betas_are_exact() {
        let g = crate::graph::generate_ba(30, 2, 3).unwrap();
        let t = simulate_influence(&g, &SirConfig::new(0.0, 50, 1), None).unwrap();
        assert!(t.values.iter().all(|&x| x == 1.0));
        let (_, stats) = simulate_influence_stats(&g, &SirConfig::new(0.0, 50, 1), None).unwrap();
        assert!(stats.iter().all(|s| s.variance == 0.0));
        let t = simulate_influence(&g, &SirConfig::new(1.0, 20, 1), None).unwrap();
        assert!(t.values.iter().all(|&x| x == 30.0));
    }

    #[test]
    fn empty_subset_gives_empty_table() {
        let g = path(3);
        let t = simulate_influence(&g, &SirConfig::new(0.5, 10, 1), Some(&[])).unwrap();
        assert!(t.is_empty());
        let t = simulate_influence(&g, &SirConfig::new(0.5, 10, 1), Some(&[2, 0])).unwrap();
        assert_eq!(t.nodes, vec![0, 2]);
        assert!(!t.is_complete(3));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let g = crate::graph::generate_ba(80, 3, 9).unwrap();
        let cfg = SirConfig::new(0.2, 200, 77);
        let base = simulate_influence(&g, &cfg.with_workers(1), None).unwrap();
        for w in [2, 8] {
            let other = simulate_influence(&g, &cfg.with_workers(w), None).unwrap();
            assert_eq!(base.to_csv(), other.to_csv());
        }
        let seeds = [0, 5, 17];
        let a = simulate_multi_seed(&g, &seeds, &cfg.with_workers(1)).unwrap();
        let b = simulate_multi_seed(&g, &seeds, &cfg.with_workers(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_examples() {
        let beta = 0.37;
        assert!((exact_influence_oracle(&path(2), 0, beta).unwrap() - (1.0 + beta)).abs() < 1e-15);
        assert!((exact_influence_oracle(&cycle(3), 0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        let expect = 1.0 + beta + beta * beta;
        assert!((exact_influence_oracle(&path(3), 0, beta).unwrap() - expect).abs() < 1e-15);
        let big = crate::graph::generate_er(12, 21, 1).unwrap();
        assert!(exact_influence_oracle(&big, 0, 0.5).is_err());
    }

    #[test]
    fn multi_seed_all_nodes() {
        let g = path(5);
        let cfg = SirConfig::new(0.7, 30, 3);
        let out = simulate_multi_seed(&g, &[0, 1, 2, 3, 4], &cfg).unwrap();
        assert_eq!(out.mean_final(), 5.0);
        assert_eq!(out.new_per_step_total, vec![5 * 30]);
        assert_eq!(out.mean_attributed(), vec![1.0; 5]);
    }

    #[test]
    fn multi_seed_components_do_not_interact() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let cfg = SirConfig::new(0.6, 500, 8);
        for run in 0..200 {
            let mut rng = rng::stream(1, MULTI_SEED, 0, run);
            let one = run_multi_seed(&g, &[0, 3], 0.6, &mut rng).unwrap();
            let left = one.recovered.iter().filter(|&&v| v < 3).count();
            let right = one.recovered.len() - left;
            assert_eq!(one.attributed, vec![left, right]);
        }
        let out = simulate_multi_seed(&g, &[0, 3], &cfg).unwrap();
        assert_eq!(out.attributed_total.iter().sum::<u64>(), out.recovered_total);
    }

    #[test]
    fn simultaneous_infection_is_split_evenly() {
        let g = path(3);
        let runs = 4000;
        let mut to_first = 0;
        for run in 0..runs {
            let mut rng = rng::stream(21, MULTI_SEED, 0, run);
            let one = run_multi_seed(&g, &[0, 2], 1.0, &mut rng).unwrap();
            assert_eq!(one.recovered, vec![0, 1, 2]);
            if one.roots[1] == 0 {
                to_first += 1;
            }
        }
        let freq = to_first as f64 / runs as f64;
        let sigma = (0.25 / runs as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "{freq}");
    }

    #[test]
    fn multi_seed_rejects_bad_seeds() {
        let g = path(3);
        let cfg = SirConfig::new(0.5, 10, 1);
        assert!(simulate_multi_seed(&g, &[], &cfg).is_err());
        assert!(simulate_multi_seed(&g, &[1, 1], &cfg).is_err());
        assert!(simulate_multi_seed(&g, &[7], &cfg).is_err());
    }

    #[test]
    fn table_round_trip() {
        let g = path(4);
        let t = simulate_influence(&g, &SirConfig::new(0.35, 100, 2), None).unwrap();
        let back = InfluenceTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(InfluenceTable::from_csv("node_id,influence,beta,runs\n0,0.5,0.1,10\n").is_err());
        let p = InfluenceTable::predicted(vec![1.5, 2.0], 0.2);
        assert_eq!(InfluenceTable::from_csv(&p.to_csv()).unwrap().provenance, Provenance::Predicted);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]

            #[test]
            fn attribution_sums_to_final_size(seed in any::<u64>(), beta in 0.0f64..=1.0, k in 1usize..6) {
                let g = crate::graph::generate_ba(40, 2, seed).unwrap();
                let seeds: Vec<usize> = (0..k).map(|i| i * 7).collect();
                let mut rng = rng::stream(seed, MULTI_SEED, 0, 0);
                let one = run_multi_seed(&g, &seeds, beta, &mut rng).unwrap();
                prop_assert_eq!(one.attributed.iter().sum::<usize>(), one.recovered.len());
                prop_assert_eq!(one.new_per_step.iter().sum::<usize>(), one.recovered.len());
                for (i, &s) in seeds.iter().enumerate() {
                    let pos = one.recovered.binary_search(&s).unwrap();
                    prop_assert_eq!(one.roots[pos], i);
                }
            }
        }
    }
}
