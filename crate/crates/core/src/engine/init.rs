//! Fine initial clustering from each point's two nearest "allies".
//!
//! Closeness is the acute angle `acos(|x_i . x_j|)`, so antipodal points count
//! as neighbours. Every resulting cluster has at least three points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::clustering::Clustering;
use crate::error::{Error, Result};
use crate::geometry::AngleCache;

/// The two nearest neighbours of every point under the acute angle, nearest
/// first. Ties go to the smaller index.
pub fn allies(angles: &AngleCache) -> Vec<[usize; 2]> {
    let n = angles.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = [(f64::INFINITY, usize::MAX); 2];
            for j in (0..n).filter(|&j| j != i) {
                let a = angles.acute(i, j);
                if a < best[0].0 {
                    best[1] = best[0];
                    best[0] = (a, j);
                } else if a < best[1].0 {
                    best[1] = (a, j);
                }
            }
            [best[0].1, best[1].1]
        })
        .collect()
}

/// Per-point initial cluster labels (dense, in order of creation).
///
/// Pass 1 walks the points starting from a seeded random position and opens a
/// cluster `{i, ally1, ally2}` whenever all three are still unallocated.
/// Pass 2 places each leftover point in the cluster of its first ally, or
/// else its second ally, repeating sweeps while that makes progress. A point
/// whose allies both stay unallocated joins the cluster of its nearest
/// allocated point.
pub fn initial_labels(angles: &AngleCache, seed: u64) -> Result<Vec<usize>> {
    let n = angles.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!(
            "initial clustering needs at least 3 points, got {n}"
        )));
    }
    let allies = allies(angles);
    let start = ChaCha8Rng::seed_from_u64(seed).random_range(0..n);
    let order: Vec<usize> = (start..n).chain(0..start).collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for &i in &order {
        let [a, b] = allies[i];
        if label[i].is_none() && label[a].is_none() && label[b].is_none() {
            label[i] = Some(next);
            label[a] = Some(next);
            label[b] = Some(next);
            next += 1;
        }
    }

    let mut leftover: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| label[i].is_none())
        .collect();
    while !leftover.is_empty() {
        let mut progressed = false;
        leftover.retain(|&i| {
            let [a, b] = allies[i];
            match label[a].or(label[b]) {
                Some(k) => {
                    label[i] = Some(k);
                    progressed = true;
                    false
                }
                None => true,
            }
        });
        if !progressed {
            let i = leftover.remove(0);
            let nearest = (0..n)
                .filter(|&j| label[j].is_some())
                .min_by(|&p, &q| angles.acute(i, p).total_cmp(&angles.acute(i, q)))
                .expect("pass 1 allocates at least one cluster");
            label[i] = label[nearest];
        }
    }
    Ok(label
        .into_iter()
        .map(|l| l.expect("all points placed"))
        .collect())
}

/// Initial clustering with statistics attached.
pub fn initial_clustering(angles: &AngleCache, seed: u64) -> Result<Clustering> {
    let labels = initial_labels(angles, seed)?;
    Clustering::from_labels(&labels, angles)
}
