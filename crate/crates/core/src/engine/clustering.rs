use crate::error::{Error, Result};
use crate::geometry::{tri_index, AngleCache};
use crate::stats::{between_stats, within_stats, PairStats};

/// A partition of the points into K non-empty clusters, carrying the
/// within-cluster and between-cluster angle statistics.
///
/// Cluster ids are dense (`0..K`). Members of every cluster are kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    assignment: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    within: Vec<PairStats>,
    // strict upper triangle of the K x K pair matrix
    between: Vec<PairStats>,
}

impl Clustering {
    /// Builds a clustering from per-point labels. Distinct label values are
    /// renumbered densely in increasing order.
    pub fn from_labels(labels: &[usize], angles: &AngleCache) -> Result<Self> {
        if labels.len() != angles.len() {
            return Err(Error::Invalid(format!(
                "{} labels for {} points",
                labels.len(),
                angles.len()
            )));
        }
        let clusters = group_labels(labels);
        Self::from_clusters(clusters, angles)
    }

    /// Builds a clustering from explicit index sets, computing all statistics
    /// from the angle cache.
    pub fn from_clusters(mut clusters: Vec<Vec<usize>>, angles: &AngleCache) -> Result<Self> {
        let n = angles.len();
        let mut assignment = vec![usize::MAX; n];
        for (k, members) in clusters.iter_mut().enumerate() {
            if members.is_empty() {
                return Err(Error::Invalid(format!("cluster {k} is empty")));
            }
            members.sort_unstable();
            for &i in members.iter() {
                if i >= n {
                    return Err(Error::Invalid(format!("point index {i} out of range")));
                }
                if assignment[i] != usize::MAX {
                    return Err(Error::Invalid(format!("point {i} in two clusters")));
                }
                assignment[i] = k;
            }
        }
        if let Some(i) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Error::Invalid(format!("point {i} is not assigned")));
        }
        let k = clusters.len();
        let within = clusters.iter().map(|c| within_stats(c, angles)).collect();
        let mut between = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for a in 0..k {
            for b in a + 1..k {
                between.push(between_stats(&clusters[a], &clusters[b], angles));
            }
        }
        Ok(Self {
            assignment,
            clusters,
            within,
            between,
        })
    }

    pub(crate) fn from_parts(
        clusters: Vec<Vec<usize>>,
        within: Vec<PairStats>,
        between: Vec<PairStats>,
        n_points: usize,
    ) -> Self {
        let mut assignment = vec![0; n_points];
        for (k, members) in clusters.iter().enumerate() {
            for &i in members {
                assignment[i] = k;
            }
        }
        Self {
            assignment,
            clusters,
            within,
            between,
        }
    }

    /// Number of clusters K.
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_points(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn size(&self, k: usize) -> usize {
        self.clusters[k].len()
    }

    pub fn within(&self, k: usize) -> &PairStats {
        &self.within[k]
    }

    /// Statistics of the cross angles between clusters `k` and `l` (k != l).
    pub fn between(&self, k: usize, l: usize) -> &PairStats {
        let (a, b) = if k < l { (k, l) } else { (l, k) };
        &self.between[tri_index(self.k(), a, b)]
    }

    /// Merges clusters `a` and `b` by adding their statistics; no angle is
    /// read. The merged cluster takes id `min(a, b)` and ids above
    /// `max(a, b)` shift down by one.
    pub fn merge(&self, a: usize, b: usize) -> Result<Clustering> {
        let k = self.k();
        if a == b || a >= k || b >= k {
            return Err(Error::Invalid(format!(
                "cannot merge clusters {a} and {b} of {k}"
            )));
        }
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        let old = |i: usize| if i < gone { i } else { i + 1 };

        let mut clusters = Vec::with_capacity(k - 1);
        let mut within = Vec::with_capacity(k - 1);
        for new in 0..k - 1 {
            let i = old(new);
            if i == keep {
                let mut members = [self.clusters[keep].as_slice(), &self.clusters[gone]].concat();
                members.sort_unstable();
                clusters.push(members);
                within.push(self.within[keep] + self.within[gone] + *self.between(keep, gone));
            } else {
                clusters.push(self.clusters[i].clone());
                within.push(self.within[i]);
            }
        }
        let mut between = Vec::with_capacity((k - 1) * (k - 2) / 2);
        for p in 0..k - 1 {
            for q in p + 1..k - 1 {
                let (i, j) = (old(p), old(q));
                let s = if i == keep {
                    *self.between(keep, j) + *self.between(gone, j)
                } else if j == keep {
                    *self.between(i, keep) + *self.between(i, gone)
                } else {
                    *self.between(i, j)
                };
                between.push(s);
            }
        }
        Ok(Self::from_parts(clusters, within, between, self.n_points()))
    }

    /// Largest relative deviation between the stored statistics and a fresh
    /// recomputation from the angle cache; counts must match exactly
    /// (returns infinity otherwise).
    pub fn stats_deviation(&self, angles: &AngleCache) -> f64 {
        let fresh = match Self::from_clusters(self.clusters.clone(), angles) {
            Ok(c) => c,
            Err(_) => return f64::INFINITY,
        };
        let rel = |x: &PairStats, y: &PairStats| {
            if x.count != y.count {
                return f64::INFINITY;
            }
            let r = |p: f64, q: f64| {
                let scale = p.abs().max(q.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (p - q).abs() / scale
                }
            };
            r(x.sum, y.sum).max(r(x.sumsq, y.sumsq))
        };
        self.within
            .iter()
            .zip(&fresh.within)
            .chain(self.between.iter().zip(&fresh.between))
            .map(|(x, y)| rel(x, y))
            .fold(0.0, f64::max)
    }
}

/// Groups point indices by label, ordering groups by label value.
pub(crate) fn group_labels(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut clusters = vec![Vec::new(); distinct.len()];
    for (i, l) in labels.iter().enumerate() {
        let k = distinct.binary_search(l).expect("label present");
        clusters[k].push(i);
    }
    clusters
}

/// Renumbers labels densely by increasing label value.
pub fn dense_labels(labels: &[usize]) -> Vec<usize> {
    let mut out = vec![0; labels.len()];
    for (k, members) in group_labels(labels).iter().enumerate() {
        for &i in members {
            out[i] = k;
        }
    }
    out
}
