//! Evaluation metrics: Kendall's tau, rank disputation, MSE and the
//! infected-ratio curve.

use crate::error::{Error, Result};
use crate::rankers::RankTable;
use crate::sir::{InfluenceTable, MultiSeedOutcome};

fn check_permutation(ranks: &[usize]) -> Result<()> {
    let mut seen = vec![false; ranks.len()];
    for &r in ranks {
        if r == 0 || r > ranks.len() || std::mem::replace(&mut seen[r - 1], true) {
            return Err(Error::param("rank sequence is not a permutation of 1..N"));
        }
    }
    Ok(())
}

/// Kendall's tau between two rank permutations, `2(n+ - n-) / (N(N-1))`.
///
/// Sorts by `x` and counts inversions of `y` with a merge sort, O(N log N).
pub fn kendall_tau(x: &[usize], y: &[usize]) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::Shape(format!("rank sequences of length {n} and {}", y.len())));
    }
    if n < 2 {
        return Err(Error::param("Kendall's tau needs at least two items"));
    }
    check_permutation(x)?;
    check_permutation(y)?;
    let mut by_x = vec![0usize; n];
    for (i, &r) in x.iter().enumerate() {
        by_x[r - 1] = y[i];
    }
    let discordant = count_inversions(&mut by_x);
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let concordant = pairs - discordant;
    Ok((concordant as f64 - discordant as f64) / pairs as f64)
}

fn count_inversions(values: &mut [usize]) -> u64 {
    let mut buf = values.to_vec();
    sort_count(values, &mut buf)
}

fn sort_count(values: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = sort_count(&mut values[..mid], &mut buf[..mid]);
    inv += sort_count(&mut values[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if values[i] <= values[j] {
            buf[k] = values[i];
            i += 1;
        } else {
            buf[k] = values[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&values[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&values[j..n]);
    values.copy_from_slice(&buf[..n]);
    inv
}

/// Kendall's tau between two score vectors after converting them to ranks
/// with the ascending-id tie-break.
pub fn kendall_tau_scores(truth: &[f64], pred: &[f64]) -> Result<f64> {
    use crate::rankers::Method;
    let x = RankTable::from_scores(Method::Truth, truth.to_vec());
    let y = RankTable::from_scores(Method::Other("pred".into()), pred.to_vec());
    kendall_tau(&x.ranks, &y.ranks)
}

/// Per-node disputation against the true ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct DisputationTable {
    pub values: Vec<f64>,
    /// `panel_ranks[j][i]`: rank of node `i` under panel algorithm `j`.
    pub panel_ranks: Vec<Vec<usize>>,
    pub truth_ranks: Vec<usize>,
}

impl DisputationTable {
    pub fn to_csv(&self, panel_names: &[String]) -> String {
        let mut out = String::from("node_id,disputation,true_rank");
        for name in panel_names {
            out.push_str(&format!(",{name}"));
        }
        out.push('\n');
        for (v, d) in self.values.iter().enumerate() {
            out.push_str(&format!("{v},{d},{}", self.truth_ranks[v]));
            for ranks in &self.panel_ranks {
                out.push_str(&format!(",{}", ranks[v]));
            }
            out.push('\n');
        }
        out
    }
}

/// Mean absolute rank error of the panel per node. With `exclude_worst`, one
/// maximal error per node is dropped (the earliest in panel order on ties)
/// and the mean is over the remaining `m - 1` algorithms.
pub fn disputation(panel: &[RankTable], truth: &RankTable, exclude_worst: bool) -> Result<DisputationTable> {
    let required = if exclude_worst { 2 } else { 1 };
    if panel.len() < required {
        return Err(Error::param(format!(
            "disputation needs at least {required} panel algorithms, got {}",
            panel.len()
        )));
    }
    let n = truth.len();
    if let Some(bad) = panel.iter().find(|t| t.len() != n) {
        return Err(Error::Shape(format!(
            "panel table {} has {} nodes, truth has {n}",
            bad.method,
            bad.len()
        )));
    }
    let mut values = Vec::with_capacity(n);
    for v in 0..n {
        let errors: Vec<usize> = panel.iter().map(|t| t.ranks[v].abs_diff(truth.ranks[v])).collect();
        let total: usize = errors.iter().sum();
        let value = if exclude_worst {
            let worst = errors.iter().copied().max().unwrap_or(0);
            (total - worst) as f64 / (errors.len() - 1) as f64
        } else {
            total as f64 / errors.len() as f64
        };
        values.push(value);
    }
    Ok(DisputationTable {
        values,
        panel_ranks: panel.iter().map(|t| t.ranks.clone()).collect(),
        truth_ranks: truth.ranks.clone(),
    })
}

/// Mean squared difference over a common node set.
pub fn mse(pred: &InfluenceTable, truth: &InfluenceTable) -> Result<f64> {
    if pred.nodes != truth.nodes {
        return Err(Error::Shape(format!(
            "tables cover different nodes ({} vs {})",
            pred.len(),
            truth.len()
        )));
    }
    mse_values(&pred.values, &truth.values)
}

pub fn mse_values(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("lengths {} and {}", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(Error::param("mean squared error of empty tables"));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

/// Cumulative infected-or-recovered fraction per step.
pub fn infected_ratio_curve(outcome: &MultiSeedOutcome, n: usize) -> Vec<f64> {
    let mut cumulative = 0u64;
    outcome
        .new_per_step_total
        .iter()
        .map(|&c| {
            cumulative += c;
            cumulative as f64 / (outcome.runs as f64 * n as f64)
        })
        .collect()
}

pub fn curve_to_csv(curve: &[f64]) -> String {
    let mut out = String::from("step,ratio\n");
    for (t, r) in curve.iter().enumerate() {
        out.push_str(&format!("{t},{r}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rankers::Method;

    fn brute_tau(x: &[usize], y: &[usize]) -> f64 {
        let n = x.len();
        let (mut c, mut d) = (0i64, 0i64);
        for i in 0..n {
            for j in (i + 1)..n {
                let s = (x[i] as i64 - x[j] as i64) * (y[i] as i64 - y[j] as i64);
                if s > 0 {
                    c += 1;
                } else if s < 0 {
                    d += 1;
                }
            }
        }
        2.0 * (c - d) as f64 / (n * (n - 1)) as f64
    }

    fn table(ranks: Vec<usize>) -> RankTable {
        RankTable {
            method: Method::Other("t".into()),
            scores: ranks.iter().map(|&r| -(r as f64)).collect(),
            ranks,
        }
    }

    #[test]
    fn tau_examples() {
        let x = vec![1, 2, 3, 4, 5];
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        let rev: Vec<usize> = x.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&x, &rev).unwrap(), -1.0);
        assert_eq!(kendall_tau(&[1, 2, 3], &[1, 3, 2]).unwrap(), 1.0 / 3.0);
        assert!(kendall_tau(&[1], &[1]).is_err());
        assert!(kendall_tau(&[1, 1], &[1, 2]).is_err());
    }

    #[test]
    fn disputation_examples() {
        let truth = table(vec![5]);
        let panel = vec![table(vec![10]), table(vec![6]), table(vec![4])];
        let d = disputation(&panel, &truth, true).unwrap();
        assert_eq!(d.values, vec![1.0]);
        let d = disputation(&[table(vec![7])], &table(vec![3]), false).unwrap();
        assert_eq!(d.values, vec![4.0]);
        let t = table(vec![2, 1, 3]);
        let d = disputation(&[t.clone(), t.clone()], &t, true).unwrap();
        assert_eq!(d.values, vec![0.0; 3]);
        assert!(disputation(&[t.clone()], &t, true).is_err());
    }

    #[test]
    fn disputation_adding_a_perfect_algorithm() {
        // errors (4, 2) -> exclude 4 -> D = 2; adding a perfect ranker gives (4, 2, 0) -> D = 1
        let truth = table(vec![3, 1, 2, 4, 5, 6, 7]);
        let a = table(vec![7, 1, 2, 4, 5, 6, 3]);
        let b = table(vec![5, 1, 2, 4, 3, 6, 7]);
        let before = disputation(&[a.clone(), b.clone()], &truth, true).unwrap();
        let after = disputation(&[a, b, truth.clone()], &truth, true).unwrap();
        assert_eq!(before.values[0], 2.0);
        assert_eq!(after.values[0], 1.0);
        assert!(after.values.iter().zip(&before.values).all(|(x, y)| x <= y));
    }

    #[test]
    fn mse_examples() {
        let t = InfluenceTable::predicted(vec![1.0, 2.0], 0.1);
        let p = InfluenceTable::predicted(vec![2.0, 4.0], 0.1);
        assert_eq!(mse(&p, &t).unwrap(), 2.5);
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        let shifted = InfluenceTable::predicted(vec![2.0, 3.0], 0.1);
        assert_eq!(mse(&shifted, &t).unwrap(), 1.0);
        let short = InfluenceTable::predicted(vec![1.0], 0.1);
        assert!(mse(&short, &t).is_err());
    }

    #[test]
    fn curve_examples() {
        let out = MultiSeedOutcome {
            seeds: vec![0, 1],
            runs: 2,
            new_per_step_total: vec![4, 2, 0],
            recovered_total: 6,
            attributed_total: vec![3, 3],
            recovery_count: vec![2; 4],
        };
        assert_eq!(infected_ratio_curve(&out, 4), vec![0.5, 0.75, 0.75]);
        assert_eq!(curve_to_csv(&[1.0]), "step,ratio\n0,1\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn permutation() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
            (2usize..200).prop_flat_map(|n| {
                let base: Vec<usize> = (1..=n).collect();
                (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
            })
        }

        proptest! {
            #[test]
            fn tau_matches_brute_force((x, y) in permutation()) {
                prop_assert_eq!(kendall_tau(&x, &y).unwrap(), brute_tau(&x, &y));
            }

            #[test]
            fn tau_flips_under_reversal((x, y) in permutation()) {
                let n = y.len();
                let rev: Vec<usize> = y.iter().map(|&r| n + 1 - r).collect();
                prop_assert_eq!(kendall_tau(&x, &rev).unwrap(), -kendall_tau(&x, &y).unwrap());
            }

            #[test]
            fn mse_zero_iff_equal(a in proptest::collection::vec(1.0f64..50.0, 1..30), i in 0usize..30, d in 0.01f64..5.0) {
                let t = InfluenceTable::predicted(a.clone(), 0.1);
                prop_assert_eq!(mse(&t, &t).unwrap(), 0.0);
                let mut b = a.clone();
                let idx = i % b.len();
                b[idx] += d;
                prop_assert!(mse(&InfluenceTable::predicted(b, 0.1), &t).unwrap() > 0.0);
            }
        }
    }
}
