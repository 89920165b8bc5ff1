//! Undirected simple graphs: ingestion, synthetic generators and the shared
//! traversal and decomposition routines every later stage builds on.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Undirected simple graph over nodes `0..n`.
///
/// Immutable after construction. Adjacency lists are sorted ascending and
/// symmetric; the edge list holds each edge once as `(u, v)` with `u < v`,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge iterator. Self-loops are dropped
    /// and duplicates (in either orientation) collapse to one edge.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u != v {
                list.push((u.min(v), u.max(v)));
            }
        }
        list.sort_unstable();
        list.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        Ok(Graph { adj, edges: list })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count() {
            return Err(Error::param("permutation length differs from node count"));
        }
        Graph::from_edges(
            self.node_count(),
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
        )
    }

    /// Edge-list text accepted by [`load_edge_list`].
    ///
    /// Edges are grouped by their larger endpoint, so any graph in which
    /// every node except 0 has a lower-numbered neighbour (BA growth, for
    /// one) reloads with identical ids.
    pub fn to_edge_list(&self) -> String {
        let mut order: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (v, u)).collect();
        order.sort_unstable();
        let mut out = String::with_capacity(self.edges.len() * 8);
        for (v, u) in order {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Component label per node; labels are assigned in order of the
    /// smallest node id of each component.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }
}

/// Parses whitespace-separated integer edge lists.
///
/// `#` starts a comment; blank lines are skipped; CRLF is accepted. Ids are
/// remapped to `0..n` in order of first appearance.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut ids: HashMap<i64, usize> = HashMap::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut endpoint = |tok: Option<&str>| -> Result<usize> {
            let tok = tok.ok_or_else(|| Error::parse(line_no, "expected two node ids"))?;
            let raw_id: i64 = tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid node id {tok:?}")))?;
            let next = ids.len();
            Ok(*ids.entry(raw_id).or_insert(next))
        };
        let u = endpoint(tokens.next())?;
        let v = endpoint(tokens.next())?;
        if tokens.next().is_some() {
            return Err(Error::parse(line_no, "more than two tokens"));
        }
        edges.push((u, v));
    }
    if ids.is_empty() {
        return Err(Error::parse(0, "edge list is empty"));
    }
    Graph::from_edges(ids.len(), edges)
}

/// Barabási–Albert preferential attachment.
///
/// Starts from a clique on `m + 1` nodes; every later node attaches to `m`
/// distinct existing nodes drawn with probability proportional to degree.
/// The result has `m(m+1)/2 + m(n-m-1)` edges.
pub fn generate_ba(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m < 1 || n <= m {
        return Err(Error::param(format!("BA requires n > m >= 1, got n={n}, m={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(m * (m + 1) / 2 + m * (n - m - 1));
    // each edge contributes both endpoints, so uniform draws are degree-proportional
    let mut endpoints = Vec::with_capacity(2 * edges.capacity());
    for u in 0..=m {
        for v in (u + 1)..=m {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for new in (m + 1)..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, new));
            endpoints.push(t);
            endpoints.push(new);
        }
    }
    Graph::from_edges(n, edges)
}

/// Uniform random simple graph with exactly `m_target` edges (G(n, M)).
pub fn generate_er(n: usize, m_target: usize, seed: u64) -> Result<Graph> {
    let pairs = n * n.saturating_sub(1) / 2;
    if m_target > pairs {
        return Err(Error::param(format!(
            "ER edge count {m_target} exceeds C({n},2) = {pairs}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = index::sample(&mut rng, pairs, m_target).into_vec();
    chosen.sort_unstable();
    let edges = chosen.into_iter().map(|k| pair_from_index(n, k));
    Graph::from_edges(n, edges)
}

/// Maps `k` in `0..C(n,2)` to the k-th pair `(i, j)`, `i < j`, in row-major order.
fn pair_from_index(n: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

/// Breadth-first order from `source`, ascending id within each level.
pub fn bfs_order(g: &Graph, source: usize) -> Vec<usize> {
    bfs_prefix(g, source, usize::MAX)
}

/// The first `limit` nodes of [`bfs_order`], without visiting the rest.
pub fn bfs_prefix(g: &Graph, source: usize, limit: usize) -> Vec<usize> {
    let mut seen = vec![false; g.node_count()];
    let mut order = Vec::new();
    if limit == 0 {
        return order;
    }
    seen[source] = true;
    order.push(source);
    let mut head = 0;
    // each level is sorted once fully discovered
    let mut level_start = 0;
    while level_start < order.len() && order.len() < limit {
        let level_end = order.len();
        while head < level_end {
            let u = order[head];
            head += 1;
            for &w in g.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
        }
        order[level_end..].sort_unstable();
        level_start = level_end;
    }
    order.truncate(limit);
    order
}

/// k-core decomposition by bucket peeling (Batagelj–Zaversnik).
pub fn core_numbers(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut deg = g.degrees();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg
}

/// Mean degree and mean squared degree.
pub fn degree_stats(g: &Graph) -> Result<(f64, f64)> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::param("degree statistics need at least one node"));
    }
    let (sum, sum_sq) = g.degrees().iter().fold((0u64, 0u64), |(s, q), &d| {
        let d = d as u64;
        (s + d, q + d * d)
    });
    Ok((sum as f64 / n as f64, sum_sq as f64 / n as f64))
}

/// Local clustering coefficient; zero for nodes of degree below two.
pub fn clustering(g: &Graph, v: usize) -> f64 {
    let nbrs = g.neighbors(v);
    let k = nbrs.len();
    if k < 2 {
        return 0.0;
    }
    let mut links = 0usize;
    for (idx, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[idx + 1..] {
            if g.has_edge(a, b) {
                links += 1;
            }
        }
    }
    2.0 * links as f64 / (k * (k - 1)) as f64
}

/// Structural descriptors available as predictor inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Degree,
    CoreNumber,
    Clustering,
    NeighborDegree,
}

impl Feature {
    pub const DEFAULT: [Feature; 4] = [
        Feature::Degree,
        Feature::CoreNumber,
        Feature::Clustering,
        Feature::NeighborDegree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Degree => "degree",
            Feature::CoreNumber => "core",
            Feature::Clustering => "clustering",
            Feature::NeighborDegree => "neighbor_degree",
        }
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "degree" => Ok(Feature::Degree),
            "core" => Ok(Feature::CoreNumber),
            "clustering" => Ok(Feature::Clustering),
            "neighbor_degree" => Ok(Feature::NeighborDegree),
            other => Err(Error::param(format!("unknown feature {other:?}"))),
        }
    }
}

/// Per-node feature matrix, row-major `n x features.len()`, each column
/// min-max normalized to `[0, 1]` (constant columns become zero).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures {
    pub features: Vec<Feature>,
    pub values: Vec<f64>,
    pub rows: usize,
}

impl NodeFeatures {
    pub fn cols(&self) -> usize {
        self.features.len()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        let c = self.cols();
        &self.values[v * c..(v + 1) * c]
    }

    pub fn get(&self, v: usize, col: usize) -> f64 {
        self.values[v * self.cols() + col]
    }
}

/// The default four-feature matrix.
pub fn node_features(g: &Graph) -> Result<NodeFeatures> {
    node_features_with(g, &Feature::DEFAULT)
}

pub fn node_features_with(g: &Graph, features: &[Feature]) -> Result<NodeFeatures> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::param("node features need at least two nodes"));
    }
    if features.is_empty() {
        return Err(Error::param("feature list is empty"));
    }
    let cores = features
        .contains(&Feature::CoreNumber)
        .then(|| core_numbers(g));
    let cols = features.len();
    let mut values = vec![0.0; n * cols];
    for (c, &feature) in features.iter().enumerate() {
        let column: Vec<f64> = (0..n)
            .map(|v| match feature {
                Feature::Degree => g.degree(v) as f64,
                Feature::CoreNumber => cores.as_ref().map_or(0.0, |k| k[v] as f64),
                Feature::Clustering => clustering(g, v),
                Feature::NeighborDegree => {
                    let nbrs = g.neighbors(v);
                    if nbrs.is_empty() {
                        0.0
                    } else {
                        nbrs.iter().map(|&u| g.degree(u) as f64).sum::<f64>() / nbrs.len() as f64
                    }
                }
            })
            .collect();
        let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for (v, x) in column.into_iter().enumerate() {
            values[v * cols + c] = if span > 0.0 { (x - lo) / span } else { 0.0 };
        }
    }
    Ok(NodeFeatures {
        features: features.to_vec(),
        values,
        rows: n,
    })
}
