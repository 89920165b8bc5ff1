//! Classical centrality rankers: degree, k-shell, H-index and collective
//! influence. They serve as comparison baselines and as the panel for the
//! disputation metric.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{core_numbers, Graph};
use crate::table;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    Degree,
    KShell,
    HIndex,
    Ci(usize),
    Truth,
    /// Any learned or externally supplied score, e.g. `alge-b`.
    Other(String),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Degree => f.write_str("degree"),
            Method::KShell => f.write_str("kshell"),
            Method::HIndex => f.write_str("hindex"),
            Method::Ci(ell) => write!(f, "ci{ell}"),
            Method::Truth => f.write_str("truth"),
            Method::Other(name) => f.write_str(name),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "degree" => Method::Degree,
            "kshell" => Method::KShell,
            "hindex" => Method::HIndex,
            "truth" => Method::Truth,
            "" => return Err(Error::param("empty method name")),
            _ => match s.strip_prefix("ci").and_then(|r| r.parse().ok()) {
                Some(ell) => Method::Ci(ell),
                None => Method::Other(s.to_owned()),
            },
        })
    }
}

/// Scores and ranks (1 = most influential) per node. Equal scores are
/// ranked by ascending node id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub method: Method,
    pub scores: Vec<f64>,
    pub ranks: Vec<usize>,
}

impl RankTable {
    pub fn from_scores(method: Method, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut ranks = vec![0; scores.len()];
        for (pos, &v) in order.iter().enumerate() {
            ranks[v] = pos + 1;
        }
        RankTable {
            method,
            scores,
            ranks,
        }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Nodes from rank 1 downward.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.ranks.len()];
        for (v, &r) in self.ranks.iter().enumerate() {
            order[r - 1] = v;
        }
        order
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,rank,score,method\n");
        for (v, (&r, &s)) in self.ranks.iter().zip(&self.scores).enumerate() {
            out.push_str(&format!("{v},{r},{s},{}\n", self.method));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = table::read_rows(text, &["node_id", "rank", "score", "method"])?;
        let n = rows.len();
        let mut scores = vec![f64::NAN; n];
        let mut ranks = vec![0; n];
        let mut method = None;
        for row in &rows {
            let v: usize = row.parse(0)?;
            if v >= n || ranks[v] != 0 {
                return Err(Error::parse(row.line, format!("node id {v} duplicated or out of range")));
            }
            ranks[v] = row.parse(1)?;
            scores[v] = row.parse(2)?;
            let m: Method = row.text(3)?.parse()?;
            if method.get_or_insert_with(|| m.clone()) != &m {
                return Err(Error::parse(row.line, "mixed methods in one rank table"));
            }
        }
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r == 0 || r > n || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::parse(0, "ranks are not a permutation"));
            }
        }
        Ok(RankTable {
            method: method.unwrap_or(Method::Other("empty".into())),
            scores,
            ranks,
        })
    }
}

pub fn rank_degree(g: &Graph) -> RankTable {
    let scores = g.degrees().into_iter().map(|d| d as f64).collect();
    RankTable::from_scores(Method::Degree, scores)
}

pub fn rank_kshell(g: &Graph) -> RankTable {
    let scores = core_numbers(g).into_iter().map(|k| k as f64).collect();
    RankTable::from_scores(Method::KShell, scores)
}

/// Largest `h` such that at least `h` neighbours have degree at least `h`.
pub fn h_index(g: &Graph, v: usize) -> usize {
    let mut degs: Vec<usize> = g.neighbors(v).iter().map(|&u| g.degree(u)).collect();
    degs.sort_unstable_by(|a, b| b.cmp(a));
    degs.iter()
        .enumerate()
        .take_while(|&(i, &d)| d > i)
        .count()
}

pub fn rank_hindex(g: &Graph) -> RankTable {
    let scores = (0..g.node_count()).map(|v| h_index(g, v) as f64).collect();
    RankTable::from_scores(Method::HIndex, scores)
}

/// Collective influence `(k_i - 1) * sum_{j at distance ell} (k_j - 1)`.
pub fn collective_influence(g: &Graph, v: usize, ell: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) -> u64 {
    let k = g.degree(v);
    if k <= 1 {
        return 0;
    }
    let mut touched = vec![v];
    dist[v] = 0;
    queue.clear();
    queue.push_back(v);
    let mut frontier_sum = 0u64;
    while let Some(u) = queue.pop_front() {
        let d = dist[u];
        if d == ell {
            frontier_sum += (g.degree(u) - 1) as u64;
            continue;
        }
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = d + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    for u in touched {
        dist[u] = usize::MAX;
    }
    (k - 1) as u64 * frontier_sum
}

pub fn rank_ci(g: &Graph, ell: usize) -> Result<RankTable> {
    if ell < 1 {
        return Err(Error::param("CI radius must be at least 1"));
    }
    let mut dist = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    let scores = (0..g.node_count())
        .map(|v| collective_influence(g, v, ell, &mut dist, &mut queue) as f64)
        .collect();
    Ok(RankTable::from_scores(Method::Ci(ell), scores))
}

/// Runs a structural ranker by method tag.
pub fn rank_by(g: &Graph, method: &Method) -> Result<RankTable> {
    match method {
        Method::Degree => Ok(rank_degree(g)),
        Method::KShell => Ok(rank_kshell(g)),
        Method::HIndex => Ok(rank_hindex(g)),
        Method::Ci(ell) => rank_ci(g, *ell),
        other => Err(Error::param(format!("{other} is not a structural ranker"))),
    }
}
