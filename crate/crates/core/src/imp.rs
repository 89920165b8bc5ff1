//! Overlap-aware greedy influence maximization.
//!
//! Every node's influence range is the BFS prefix of length `ceil(I_v)`.
//! Seeds are picked by largest residual range; the picked range is marked
//! covered and subtracted from all other ranges before the next pick.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{bfs_prefix, Graph};
use crate::sir::{InfluenceTable, MultiSeedOutcome};

/// Range length for a real influence value (at least one node).
fn range_len(influence: f64) -> usize {
    if influence.is_finite() && influence > 1.0 {
        influence.ceil() as usize
    } else {
        1
    }
}

/// `ranges[v]`: the first `ceil(I_v)` nodes of the BFS order from `v`.
pub fn influence_ranges(g: &Graph, inf: &InfluenceTable) -> Result<Vec<Vec<usize>>> {
    let values = inf.dense(g.node_count())?;
    Ok((0..g.node_count())
        .into_par_iter()
        .map(|v| bfs_prefix(g, v, range_len(values[v])))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRecord {
    pub node: usize,
    /// Residual range size when the seed was picked.
    pub residual: usize,
    /// Nodes newly covered by this seed, in BFS order.
    pub covered: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSelection {
    pub seeds: Vec<SeedRecord>,
    pub budget: usize,
    /// Total covered node count after the last pick.
    pub covered_total: usize,
}

impl SeedSelection {
    pub fn nodes(&self) -> Vec<usize> {
        self.seeds.iter().map(|s| s.node).collect()
    }

    pub fn unused_budget(&self) -> usize {
        self.budget - self.seeds.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,node_id,residual_influence,covered\n");
        for (i, s) in self.seeds.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", i + 1, s.node, s.residual, s.covered.len()));
        }
        out
    }
}

/// Greedy seed selection with range deduction.
///
/// Stops after `k` seeds or once every node is covered.
pub fn select_seeds(g: &Graph, inf: &InfluenceTable, k: usize) -> Result<SeedSelection> {
    let n = g.node_count();
    if k < 1 || k > n {
        return Err(Error::param(format!("seed budget {k} outside 1..={n}")));
    }
    let ranges = influence_ranges(g, inf)?;
    Ok(select_from_ranges(&ranges, k))
}

/// Selection loop over precomputed ranges.
pub fn select_from_ranges(ranges: &[Vec<usize>], k: usize) -> SeedSelection {
    let n = ranges.len();
    // holders[u]: nodes whose range contains u
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, range) in ranges.iter().enumerate() {
        for &u in range {
            holders[u].push(v);
        }
    }
    let mut residual: Vec<usize> = ranges.iter().map(Vec::len).collect();
    // ordered by (residual desc, id asc)
    let mut queue: BTreeSet<(std::cmp::Reverse<usize>, usize)> =
        residual.iter().enumerate().map(|(v, &r)| (std::cmp::Reverse(r), v)).collect();
    let mut covered = vec![false; n];
    let mut selection = SeedSelection {
        seeds: Vec::new(),
        budget: k,
        covered_total: 0,
    };
    while selection.seeds.len() < k {
        let Some(&(std::cmp::Reverse(best), node)) = queue.first() else {
            break;
        };
        if best == 0 {
            break;
        }
        let newly: Vec<usize> = ranges[node].iter().copied().filter(|&u| !covered[u]).collect();
        debug_assert_eq!(newly.len(), best);
        for &u in &newly {
            covered[u] = true;
            for &v in &holders[u] {
                queue.remove(&(std::cmp::Reverse(residual[v]), v));
                residual[v] -= 1;
                queue.insert((std::cmp::Reverse(residual[v]), v));
            }
        }
        selection.covered_total += newly.len();
        selection.seeds.push(SeedRecord {
            node,
            residual: best,
            covered: newly,
        });
    }
    selection
}

/// The `k` nodes of largest individual influence (ascending id on ties).
pub fn top_k_by_influence(inf: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inf.len()).collect();
    order.sort_by(|&a, &b| inf[b].total_cmp(&inf[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapEntry {
    pub seed: usize,
    /// `O_i = |C_i ∩ ∪_{j≠i} C_j|`
    pub overlap: usize,
    pub child_count: usize,
    /// `I_i`
    pub individual: f64,
    /// `IN_i`
    pub attributed: f64,
    /// `ID_i = max(0, I_i - IN_i)`
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub entries: Vec<OverlapEntry>,
}

impl OverlapReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,overlap,children,individual_influence,attributed_infected,influence_decrease\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.seed, e.overlap, e.child_count, e.individual, e.attributed, e.decrease
            ));
        }
        out
    }
}

/// `O_i` for each child set against the union of all the others.
pub fn overlaps(children: &[Vec<usize>]) -> Vec<usize> {
    let mut multiplicity = std::collections::HashMap::new();
    for set in children {
        let unique: BTreeSet<usize> = set.iter().copied().collect();
        for u in unique {
            *multiplicity.entry(u).or_insert(0usize) += 1;
        }
    }
    children
        .iter()
        .map(|set| {
            let unique: BTreeSet<usize> = set.iter().copied().collect();
            unique.iter().filter(|u| multiplicity[u] > 1).count()
        })
        .collect()
}

pub fn influence_decrease(individual: f64, attributed: f64) -> f64 {
    (individual - attributed).max(0.0)
}

/// Overlap and influence-decrease diagnostics for a seed set. Child sets
/// come from BFS ranges sized by the true individual influence.
pub fn overlap_report(g: &Graph, seeds: &[usize], true_inf: &InfluenceTable, outcome: &MultiSeedOutcome) -> Result<OverlapReport> {
    if outcome.seeds != seeds || outcome.attributed_total.len() != seeds.len() || outcome.runs == 0 {
        return Err(Error::param("multi-seed outcome does not carry attribution for these seeds"));
    }
    let individual: Vec<f64> = seeds
        .iter()
        .map(|&s| {
            true_inf
                .get(s)
                .ok_or_else(|| Error::param(format!("no true influence for seed {s}")))
        })
        .collect::<Result<_>>()?;
    let children: Vec<Vec<usize>> = seeds
        .iter()
        .zip(&individual)
        .map(|(&s, &i)| bfs_prefix(g, s, range_len(i)))
        .collect();
    let o = overlaps(&children);
    let attributed = outcome.mean_attributed();
    let entries = seeds
        .iter()
        .enumerate()
        .map(|(i, &seed)| OverlapEntry {
            seed,
            overlap: o[i],
            child_count: children[i].len(),
            individual: individual[i],
            attributed: attributed[i],
            decrease: influence_decrease(individual[i], attributed[i]),
        })
        .collect();
    Ok(OverlapReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sir::{simulate_multi_seed, SirConfig};

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).unwrap()
    }

    fn table(values: Vec<f64>) -> InfluenceTable {
        InfluenceTable::predicted(values, 0.1)
    }

    #[test]
    fn range_examples() {
        let g = star(6);
        let mut inf = vec![1.0; 7];
        inf[0] = 3.4;
        let r = influence_ranges(&g, &table(inf)).unwrap();
        assert_eq!(r[0], vec![0, 1, 2, 3]);
        assert_eq!(r[3], vec![3]);
        let r = influence_ranges(&g, &table(vec![50.0; 7])).unwrap();
        assert_eq!(r[2].len(), 7);
        assert!(influence_ranges(&g, &table(vec![1.0; 3])).is_err());
    }

    #[test]
    fn single_seed_is_argmax() {
        let g = star(6);
        let sel = select_seeds(&g, &table(vec![2.0, 1.0, 1.5, 1.0, 2.0, 1.0, 1.0]), 1).unwrap();
        assert_eq!(sel.nodes(), vec![0]);
        assert!(select_seeds(&g, &table(vec![1.0; 7]), 0).is_err());
        assert!(select_seeds(&g, &table(vec![1.0; 7]), 8).is_err());
    }

    #[test]
    fn two_cliques_get_one_seed_each() {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for u in 0..4 {
                for v in (u + 1)..4 {
                    edges.push((base + u, base + v));
                }
            }
        }
        let g = Graph::from_edges(8, edges).unwrap();
        let sel = select_seeds(&g, &table(vec![3.2; 8]), 2).unwrap();
        assert_eq!(sel.nodes(), vec![0, 4]);
    }

    #[test]
    fn edgeless_takes_all_in_order() {
        let g = Graph::empty(5);
        let sel = select_seeds(&g, &table(vec![1.0; 5]), 5).unwrap();
        assert_eq!(sel.nodes(), vec![0, 1, 2, 3, 4]);
        assert_eq!(sel.unused_budget(), 0);
    }

    #[test]
    fn stops_when_everything_is_covered() {
        let g = star(4);
        let sel = select_seeds(&g, &table(vec![5.0, 1.0, 1.0, 1.0, 1.0]), 3).unwrap();
        assert_eq!(sel.nodes(), vec![0]);
        assert_eq!(sel.unused_budget(), 2);
        assert_eq!(sel.covered_total, 5);
    }

    #[test]
    fn overlap_examples() {
        let (a, b, c, d) = (0, 1, 2, 3);
        assert_eq!(overlaps(&[vec![a, b, c], vec![b, c, d]]), vec![2, 2]);
        assert_eq!(overlaps(&[vec![0, 1], vec![2]]), vec![0, 0]);
        assert_eq!(influence_decrease(4.0, 5.2), 0.0);
        assert_eq!(influence_decrease(4.0, 2.5), 1.5);
    }

    #[test]
    fn report_on_separate_components() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let truth = table(vec![2.0; 6]);
        let out = simulate_multi_seed(&g, &[0, 3], &SirConfig::new(0.5, 200, 1)).unwrap();
        let rep = overlap_report(&g, &[0, 3], &truth, &out).unwrap();
        assert!(rep.entries.iter().all(|e| e.overlap == 0));
        assert!(rep.entries.iter().all(|e| e.overlap <= e.child_count && e.decrease >= 0.0));
        assert!(overlap_report(&g, &[0, 4], &truth, &out).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(60))]

            #[test]
            fn coverage_is_disjoint_and_residuals_shrink(seed in any::<u64>(), k in 1usize..20) {
                let g = crate::graph::generate_ba(60, 2, seed).unwrap();
                let inf: Vec<f64> = (0..60).map(|v| 1.0 + ((v as u64 * 2654435761 ^ seed) % 9) as f64).collect();
                let sel = select_seeds(&g, &table(inf.clone()), k).unwrap();
                let total: usize = sel.seeds.iter().map(|s| s.covered.len()).sum();
                let union: BTreeSet<usize> = sel.seeds.iter().flat_map(|s| s.covered.iter().copied()).collect();
                prop_assert_eq!(total, union.len());
                prop_assert_eq!(total, sel.covered_total);
                prop_assert!(sel.seeds.windows(2).all(|w| w[0].residual >= w[1].residual));
                let nodes = sel.nodes();
                let distinct: BTreeSet<usize> = nodes.iter().copied().collect();
                prop_assert_eq!(distinct.len(), nodes.len());
                prop_assert_eq!(sel, select_seeds(&g, &table(inf), k).unwrap());
            }
        }
    }
}
