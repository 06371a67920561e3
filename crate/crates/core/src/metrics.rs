//! Clustering error and normalized mutual information.

use crate::error::{Error, Result};

/// Ground-truth and predicted labels of the same points, both dense.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPair {
    truth: Vec<usize>,
    pred: Vec<usize>,
    l_truth: usize,
    l_pred: usize,
}

fn dense_count(labels: &[usize], side: &str) -> Result<usize> {
    let l = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; l];
    for &x in labels {
        seen[x] = true;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::Invalid(format!(
            "{side} labels are not dense: {k} is missing"
        )));
    }
    Ok(l)
}

impl LabelPair {
    pub fn new(truth: Vec<usize>, pred: Vec<usize>) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Invalid(format!(
                "{} truth labels vs {} predicted",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::Invalid("no labels".into()));
        }
        let l_truth = dense_count(&truth, "truth")?;
        let l_pred = dense_count(&pred, "predicted")?;
        Ok(Self {
            truth,
            pred,
            l_truth,
            l_pred,
        })
    }

    /// Like [`LabelPair::new`] but renumbers both sides densely first.
    pub fn from_raw(truth: &[usize], pred: &[usize]) -> Result<Self> {
        Self::new(
            crate::engine::dense_labels(truth),
            crate::engine::dense_labels(pred),
        )
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn truth(&self) -> &[usize] {
        &self.truth
    }

    pub fn pred(&self) -> &[usize] {
        &self.pred
    }

    pub fn l_truth(&self) -> usize {
        self.l_truth
    }

    pub fn l_pred(&self) -> usize {
        self.l_pred
    }

    /// `c[p][t]`: points with predicted label `p` and true label `t`.
    pub fn confusion(&self) -> Vec<Vec<usize>> {
        let mut c = vec![vec![0; self.l_truth]; self.l_pred];
        for (&t, &p) in self.truth.iter().zip(&self.pred) {
            c[p][t] += 1;
        }
        c
    }
}

/// Minimum-cost perfect assignment on a square matrix (shortest augmenting
/// paths with potentials). Returns `assign[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; index 0 is the virtual start column
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assign[row_of[j] - 1] = j - 1;
        }
    }
    assign
}

/// Number of points that agree under the best one-to-one label matching.
fn matched_points(pair: &LabelPair) -> usize {
    let c = pair.confusion();
    let size = pair.l_pred.max(pair.l_truth);
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|p| {
            (0..size)
                .map(|t| -(c.get(p).and_then(|row| row.get(t)).copied().unwrap_or(0) as i64))
                .collect()
        })
        .collect();
    min_cost_assignment(&cost)
        .iter()
        .enumerate()
        .map(|(p, &t)| -cost[p][t] as usize)
        .sum()
}

/// Fraction of points misclassified under the best one-to-one matching of
/// predicted to true labels. Predicted clusters left unmatched count as
/// errors in full.
pub fn clustering_error(pair: &LabelPair) -> f64 {
    1.0 - matched_points(pair) as f64 / pair.len() as f64
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the mean of the two entropies, in nats. Two
/// single-cluster partitions score 1.
pub fn nmi(pair: &LabelPair) -> f64 {
    let n = pair.len() as f64;
    let c = pair.confusion();
    let row: Vec<usize> = c.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<usize> = (0..pair.l_truth)
        .map(|t| c.iter().map(|r| r[t]).sum())
        .collect();
    let h_pred = entropy(row.iter().copied(), n);
    let h_truth = entropy(col.iter().copied(), n);
    let denom = 0.5 * (h_pred + h_truth);
    if denom <= 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for (p, r) in c.iter().enumerate() {
        for (t, &nij) in r.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (row[p] as f64 * col[t] as f64)).ln();
            }
        }
    }
    (mi / denom).clamp(0.0, 1.0)
}

pub fn abs_l_error(l_true: usize, l_hat: usize) -> usize {
    l_true.abs_diff(l_hat)
}
