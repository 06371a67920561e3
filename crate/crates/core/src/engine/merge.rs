//! The merge loop.
//!
//! Statistics are kept per initial-cluster slot. Merging the mergeable pair
//! folds the absorbed slot into the surviving one by adding sums, so each step
//! touches O(K) pair statistics and distances and never reads an angle. Row
//! minima (cluster scores) are updated in place and only rescanned for rows
//! whose partner was one of the merged clusters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clustering::Clustering;
use super::select::threshold;
use crate::error::{Error, Result};
use crate::geometry::tri_index;
use crate::stats::{cluster_distance, t_pair, PairStats};

/// One step of the merge loop, recorded before the merge happens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Number of clusters before the merge.
    pub k: usize,
    pub gamma: f64,
    /// Threshold at this step; +infinity (serialized as null) when t < 2.
    #[serde(with = "infinite_as_null")]
    pub zeta: f64,
    /// Independent sample count of the mergeable pair.
    pub t: usize,
    /// Mergeable pair `(i*, j*)` as dense cluster ids of the K-clustering.
    pub pair: (usize, usize),
    /// Per-cluster scores (dense ids), when recording was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partners: Option<Vec<usize>>,
}

impl TraceEntry {
    pub fn crosses(&self) -> bool {
        self.gamma > self.zeta
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Per-step record of the merge loop, from K = P down to K = 2.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeTrace {
    pub entries: Vec<TraceEntry>,
}

impl MergeTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get_k(&self, k: usize) -> Option<&TraceEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    /// Largest K whose score exceeds its threshold.
    pub fn largest_crossing(&self) -> Option<usize> {
        self.entries
            .iter()
            .filter(|e| e.crosses())
            .map(|e| e.k)
            .max()
    }
}

/// Merge history in terms of initial-cluster slots: slot `gone` is absorbed
/// into slot `keep` (always `keep < gone`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    initial: Vec<usize>,
    n_initial: usize,
    merges: Vec<(usize, usize)>,
}

impl Dendrogram {
    pub fn new(initial: Vec<usize>, merges: Vec<(usize, usize)>) -> Result<Self> {
        let n_initial = initial.iter().max().map_or(0, |m| m + 1);
        if merges.len() >= n_initial.max(1) {
            return Err(Error::Invalid("more merges than initial clusters".into()));
        }
        if merges.iter().any(|&(a, b)| a >= b || b >= n_initial) {
            return Err(Error::Invalid(
                "merge entries must satisfy keep < gone < P".into(),
            ));
        }
        Ok(Self {
            initial,
            n_initial,
            merges,
        })
    }

    /// Number of initial clusters P.
    pub fn initial_k(&self) -> usize {
        self.n_initial
    }

    pub fn initial_labels(&self) -> &[usize] {
        &self.initial
    }

    pub fn merges(&self) -> &[(usize, usize)] {
        &self.merges
    }

    /// Dense per-point labels of the clustering with `k` clusters
    /// (`1 <= k <= P`). Below the last recorded merge every point shares one
    /// cluster.
    pub fn labels_at(&self, k: usize) -> Result<Vec<usize>> {
        let p = self.n_initial;
        if k == 0 || k > p {
            return Err(Error::Invalid(format!(
                "no clustering with {k} clusters (P = {p})"
            )));
        }
        if k == 1 {
            return Ok(vec![0; self.initial.len()]);
        }
        let steps = p - k;
        if steps > self.merges.len() {
            return Err(Error::Invalid(format!("dendrogram does not reach K = {k}")));
        }
        let mut parent: Vec<usize> = (0..p).collect();
        for &(keep, gone) in &self.merges[..steps] {
            parent[gone] = keep;
        }
        let root = |mut s: usize| {
            while parent[s] != s {
                s = parent[s];
            }
            s
        };
        let roots: Vec<usize> = (0..p).map(root).collect();
        let mut dense = vec![usize::MAX; p];
        let mut next = 0;
        for s in 0..p {
            if roots[s] == s {
                dense[s] = next;
                next += 1;
            }
        }
        Ok(self.initial.iter().map(|&s| dense[roots[s]]).collect())
    }
}

/// Output of [`run_merging`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRun {
    pub trace: MergeTrace,
    pub dendrogram: Dendrogram,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MergeOptions {
    /// Keep per-cluster scores and partners in every trace entry.
    pub record_scores: bool,
}

/// Incremental state of the merge loop.
#[derive(Debug, Clone)]
pub struct MergeEngine {
    p: usize,
    k: usize,
    n_points: usize,
    members: Vec<Vec<usize>>,
    active: Vec<bool>,
    within: Vec<PairStats>,
    between: Vec<PairStats>,
    dist: Vec<f64>,
    eta: Vec<f64>,
    partner: Vec<usize>,
    merges: Vec<(usize, usize)>,
    initial_labels: Vec<usize>,
    options: MergeOptions,
}

impl MergeEngine {
    pub fn new(initial: &Clustering, options: MergeOptions) -> Result<Self> {
        let p = initial.k();
        if let Some(k) = (0..p).find(|&k| initial.size(k) < 3) {
            return Err(Error::TooFewAngles {
                count: initial.within(k).count,
            });
        }
        let mut between = Vec::with_capacity(p * p.saturating_sub(1) / 2);
        for a in 0..p {
            for b in a + 1..p {
                between.push(*initial.between(a, b));
            }
        }
        let within: Vec<PairStats> = (0..p).map(|k| *initial.within(k)).collect();

        let mut dist = vec![f64::NAN; p * p];
        dist.par_chunks_mut(p.max(1))
            .enumerate()
            .try_for_each(|(a, row)| -> Result<()> {
                for (b, d) in row.iter_mut().enumerate() {
                    if a != b {
                        let pair = if a < b {
                            &between[tri_index(p, a, b)]
                        } else {
                            &between[tri_index(p, b, a)]
                        };
                        *d = cluster_distance(&within[a], pair)?;
                    }
                }
                Ok(())
            })?;

        let mut engine = Self {
            p,
            k: p,
            n_points: initial.n_points(),
            members: initial.clusters().to_vec(),
            active: vec![true; p],
            within,
            between,
            dist,
            eta: vec![f64::INFINITY; p],
            partner: vec![usize::MAX; p],
            merges: Vec::with_capacity(p.saturating_sub(1)),
            initial_labels: initial.assignment().to_vec(),
            options,
        };
        for j in 0..p {
            engine.rescan(j);
        }
        Ok(engine)
    }

    /// Current number of clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    fn pair_index(&self, a: usize, b: usize) -> usize {
        if a < b {
            tri_index(self.p, a, b)
        } else {
            tri_index(self.p, b, a)
        }
    }

    fn rescan(&mut self, j: usize) {
        let row = &self.dist[j * self.p..(j + 1) * self.p];
        let mut best = (f64::INFINITY, usize::MAX);
        for (l, &d) in row.iter().enumerate() {
            if l != j && self.active[l] && (d < best.0 || best.1 == usize::MAX) {
                best = (d, l);
            }
        }
        self.eta[j] = best.0;
        self.partner[j] = best.1;
    }

    fn active_slots(&self) -> Vec<usize> {
        (0..self.p).filter(|&s| self.active[s]).collect()
    }

    /// Performs one merge and returns the record of the step.
    pub fn step(&mut self) -> Result<TraceEntry> {
        if self.k < 2 {
            return Err(Error::Invalid("nothing left to merge".into()));
        }
        let mut i_star = usize::MAX;
        for s in (0..self.p).filter(|&s| self.active[s]) {
            if i_star == usize::MAX || self.eta[s] < self.eta[i_star] {
                i_star = s;
            }
        }
        let j_star = self.partner[i_star];
        let gamma = self.eta[i_star];
        let t = t_pair(self.members[i_star].len(), self.members[j_star].len());

        let slots = self.active_slots();
        let dense = |s: usize| slots.binary_search(&s).expect("active slot");
        let (eta, partners) = if self.options.record_scores {
            (
                Some(slots.iter().map(|&s| self.eta[s]).collect()),
                Some(slots.iter().map(|&s| dense(self.partner[s])).collect()),
            )
        } else {
            (None, None)
        };
        let entry = TraceEntry {
            k: self.k,
            gamma,
            zeta: threshold(t),
            t,
            pair: (dense(i_star), dense(j_star)),
            eta,
            partners,
        };
        self.merge_slots(i_star, j_star)?;
        Ok(entry)
    }

    fn merge_slots(&mut self, a: usize, b: usize) -> Result<()> {
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        let joint = self.between[self.pair_index(keep, gone)];
        self.within[keep] = self.within[keep] + self.within[gone] + joint;
        let absorbed = std::mem::take(&mut self.members[gone]);
        self.members[keep].extend(absorbed);
        self.members[keep].sort_unstable();
        self.active[gone] = false;
        self.k -= 1;
        self.merges.push((keep, gone));

        let p = self.p;
        let others: Vec<usize> = (0..p).filter(|&l| self.active[l] && l != keep).collect();
        for &l in &others {
            let idx = self.pair_index(keep, l);
            self.between[idx] = self.between[idx] + self.between[self.pair_index(gone, l)];
            let pair = self.between[idx];
            self.dist[keep * p + l] = cluster_distance(&self.within[keep], &pair)?;
            self.dist[l * p + keep] = cluster_distance(&self.within[l], &pair)?;
        }
        self.rescan(keep);
        for &l in &others {
            let partner = self.partner[l];
            if partner == keep || partner == gone {
                self.rescan(l);
            } else {
                let d = self.dist[l * p + keep];
                if d < self.eta[l] || (d == self.eta[l] && keep < partner) {
                    self.eta[l] = d;
                    self.partner[l] = keep;
                }
            }
        }
        Ok(())
    }

    /// The current clustering, with dense ids in slot order.
    pub fn snapshot(&self) -> Clustering {
        let slots = self.active_slots();
        let clusters = slots.iter().map(|&s| self.members[s].clone()).collect();
        let within = slots.iter().map(|&s| self.within[s]).collect();
        let mut between = Vec::with_capacity(slots.len() * slots.len().saturating_sub(1) / 2);
        for (x, &a) in slots.iter().enumerate() {
            for &b in &slots[x + 1..] {
                between.push(self.between[self.pair_index(a, b)]);
            }
        }
        Clustering::from_parts(clusters, within, between, self.n_points)
    }

    pub fn dendrogram(&self) -> Dendrogram {
        Dendrogram {
            initial: self.initial_labels.clone(),
            n_initial: self.p,
            merges: self.merges.clone(),
        }
    }
}

/// Runs the merge loop from the initial clustering down to two clusters.
pub fn run_merging(initial: &Clustering) -> Result<MergeRun> {
    run_merging_with(initial, MergeOptions::default())
}

pub fn run_merging_with(initial: &Clustering, options: MergeOptions) -> Result<MergeRun> {
    if initial.k() < 2 {
        return Err(Error::Invalid(format!(
            "merging needs at least 2 initial clusters, got {}",
            initial.k()
        )));
    }
    let mut engine = MergeEngine::new(initial, options)?;
    let mut trace = MergeTrace::default();
    while engine.k() >= 2 {
        trace.entries.push(engine.step()?);
    }
    Ok(MergeRun {
        trace,
        dendrogram: engine.dendrogram(),
    })
}
