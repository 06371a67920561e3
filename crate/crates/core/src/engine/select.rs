use serde::{Deserialize, Serialize};

use super::merge::MergeRun;
use crate::error::{Error, Result};

/// Merge threshold `1/sqrt(t - 1)`; infinite when fewer than two samples.
pub fn threshold(t: usize) -> f64 {
    if t < 2 {
        f64::INFINITY
    } else {
        1.0 / ((t - 1) as f64).sqrt()
    }
}

/// Outcome of model selection over a merge run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Estimated number of subspaces.
    pub l_hat: usize,
    /// Whether any score exceeded its threshold. When not, `l_hat` is 1.
    pub crossed: bool,
    /// Dense per-point labels of the selected clustering.
    pub labels: Vec<usize>,
}

/// Picks the largest K whose score exceeds its threshold and returns the
/// K-clustering of the dendrogram. Falls back to a single cluster when no
/// step crosses.
pub fn select_clustering(run: &MergeRun) -> Result<SelectionResult> {
    if run.trace.is_empty() {
        return Err(Error::Invalid("empty merge trace".into()));
    }
    let (l_hat, crossed) = match run.trace.largest_crossing() {
        Some(k) => (k, true),
        None => (1, false),
    };
    Ok(SelectionResult {
        l_hat,
        crossed,
        labels: run.dendrogram.labels_at(l_hat)?,
    })
}
