//! Active-learning sample selection from a relative-entropy correlation
//! network.
//!
//! Each node is described by its hop-distance shell distribution. Pairwise
//! symmetrized KL divergences `r_ij = RE_ij + RE_ji` are normalized to
//! similarities `s_ij = 1 - r_ij / max r`. The correlation network keeps the
//! pairs whose similarity exceeds the largest threshold that still leaves it
//! connected; representatives are then picked greedily by remaining degree,
//! removing each pick together with its neighbours.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_EPS: f64 = 1e-9;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Fraction of the other nodes of `i`'s component found at each hop
/// distance `1..=len`. Isolated nodes get the all-zero vector.
pub fn shell_distribution(g: &Graph, i: usize, len: usize) -> Result<Vec<f64>> {
    if g.node_count() < 2 {
        return Err(Error::param("shell distributions need at least two nodes"));
    }
    let dist = g.distances(i);
    Ok(shell_from_distances(&dist, len))
}

fn shell_from_distances(dist: &[Option<usize>], len: usize) -> Vec<f64> {
    let mut counts = vec![0usize; len];
    let mut reached = 0usize;
    for d in dist.iter().flatten().copied().filter(|&d| d > 0) {
        counts[d - 1] += 1;
        reached += 1;
    }
    if reached == 0 {
        return vec![0.0; len];
    }
    counts.into_iter().map(|c| c as f64 / reached as f64).collect()
}

/// Shell distributions of every node, zero-padded to the largest
/// within-component eccentricity.
pub fn shell_distributions(g: &Graph) -> Result<Vec<Vec<f64>>> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::param("shell distributions need at least two nodes"));
    }
    let all: Vec<Vec<Option<usize>>> = (0..n).into_par_iter().map(|i| g.distances(i)).collect();
    let len = all
        .iter()
        .flat_map(|d| d.iter().flatten().copied())
        .max()
        .unwrap_or(0)
        .max(1);
    Ok(all.iter().map(|d| shell_from_distances(d, len)).collect())
}

/// `KL(p~ || q~)` in nats, where `x~` adds `eps` to every bin and renormalizes.
pub fn relative_entropy(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    if !(eps > 0.0) {
        return Err(Error::param("smoothing must be positive"));
    }
    let zp: f64 = p.iter().map(|x| x + eps).sum();
    let zq: f64 = q.iter().map(|x| x + eps).sum();
    let kl: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let a = (a + eps) / zp;
            let b = (b + eps) / zq;
            a * (a / b).ln()
        })
        .sum();
    Ok(kl.max(0.0))
}

/// Dense symmetric similarity matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    /// Builds a matrix from a full row-major array; symmetry and range are checked.
    pub fn from_dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Shape(format!("{} values for a {n}x{n} matrix", values.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let s = values[i * n + j];
                if i != j && (!(0.0..=1.0).contains(&s) || s != values[j * n + i]) {
                    return Err(Error::param(format!("entry ({i}, {j}) = {s} is out of range or asymmetric")));
                }
            }
        }
        let mut m = CorrelationMatrix { n, values };
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Relative-entropy correlation matrix of `g`.
///
/// If every pair has zero divergence (all nodes structurally alike) every
/// off-diagonal similarity is 1.
pub fn correlation_matrix(g: &Graph, eps: f64) -> Result<CorrelationMatrix> {
    let shells = shell_distributions(g)?;
    let n = g.node_count();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| relative_entropy(&shells[i], &shells[j], eps))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut r = vec![0.0; n * n];
    let mut max_r = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let sym = rows[i][j] + rows[j][i];
            r[i * n + j] = sym;
            r[j * n + i] = sym;
            max_r = max_r.max(sym);
        }
    }
    let mut values = vec![1.0; n * n];
    if max_r > 0.0 {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    values[i * n + j] = 1.0 - r[i * n + j] / max_r;
                }
            }
        }
    }
    Ok(CorrelationMatrix { n, values })
}

/// Similarity graph: edge `(i, j)` iff `s_ij > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationNetwork {
    pub graph: Graph,
    pub threshold: f64,
}

pub fn network_at(s: &CorrelationMatrix, threshold: f64) -> Graph {
    let n = s.size();
    let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
    Graph::from_edges(n, edges.filter(|&(i, j)| s.get(i, j) > threshold)).expect("indices in range")
}

fn connected_above(s: &CorrelationMatrix, threshold: f64) -> bool {
    let n = s.size();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && s.get(u, v) > threshold {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Bisects for the largest threshold that keeps the network connected.
///
/// The returned threshold lies within `tol` below the connectivity
/// bottleneck, so the network is connected with the fewest edges that
/// resolution allows.
pub fn threshold_by_bisection(s: &CorrelationMatrix, tol: f64) -> Result<CorrelationNetwork> {
    if !(tol > 0.0) {
        return Err(Error::param("bisection tolerance must be positive"));
    }
    if !connected_above(s, 0.0) {
        return Err(Error::Degenerate("correlation network is disconnected at threshold 0".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if connected_above(s, hi) {
        lo = hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if connected_above(s, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CorrelationNetwork {
        graph: network_at(s, lo),
        threshold: lo,
    })
}

/// Representatives in selection order, with the round each was picked in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentativeSet {
    pub nodes: Vec<usize>,
    pub rounds: Vec<usize>,
}

impl RepresentativeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Keeps the first `max_labels` picks.
    pub fn truncated(mut self, max_labels: Option<usize>) -> Self {
        if let Some(cap) = max_labels {
            self.nodes.truncate(cap);
            self.rounds.truncate(cap);
        }
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,round\n");
        for (v, r) in self.nodes.iter().zip(&self.rounds) {
            out.push_str(&format!("{v},{r}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = crate::table::read_rows(text, &["node_id", "round"])?;
        let mut set = RepresentativeSet {
            nodes: Vec::with_capacity(rows.len()),
            rounds: Vec::with_capacity(rows.len()),
        };
        for row in &rows {
            set.nodes.push(row.parse(0)?);
            set.rounds.push(row.parse(1)?);
        }
        Ok(set)
    }
}

/// Repeatedly takes the remaining node with the most remaining neighbours
/// (lowest id on ties) and deletes it with its neighbourhood.
pub fn select_representatives(cn: &CorrelationNetwork) -> RepresentativeSet {
    let g = &cn.graph;
    let n = g.node_count();
    let mut alive = vec![true; n];
    let mut degree = g.degrees();
    let mut remaining = n;
    let mut set = RepresentativeSet {
        nodes: Vec::new(),
        rounds: Vec::new(),
    };
    let mut round = 0;
    while remaining > 0 {
        round += 1;
        let pick = (0..n)
            .filter(|&v| alive[v])
            .max_by(|&a, &b| degree[a].cmp(&degree[b]).then(b.cmp(&a)))
            .expect("a node remains");
        set.nodes.push(pick);
        set.rounds.push(round);
        let mut removed = vec![pick];
        removed.extend(g.neighbors(pick).iter().copied().filter(|&u| alive[u]));
        for &u in &removed {
            alive[u] = false;
            remaining -= 1;
        }
        for &u in &removed {
            for &w in g.neighbors(u) {
                if alive[w] {
                    degree[w] -= 1;
                }
            }
        }
    }
    set
}

/// Correlation matrix, threshold search and selection in one call.
pub fn sample_representatives(g: &Graph, eps: f64, tol: f64, max_labels: Option<usize>) -> Result<(CorrelationNetwork, RepresentativeSet)> {
    let s = correlation_matrix(g, eps)?;
    let cn = threshold_by_bisection(&s, tol)?;
    let reps = select_representatives(&cn).truncated(max_labels);
    Ok((cn, reps))
}
