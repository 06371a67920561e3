//! Bottom-up merging of an initial clustering and model selection.

mod clustering;
mod init;
mod merge;
mod scores;
mod select;

pub use clustering::{dense_labels, Clustering};
pub use init::{allies, initial_clustering, initial_labels};
pub use merge::{
    run_merging, run_merging_with, Dendrogram, MergeEngine, MergeOptions, MergeRun, MergeTrace,
    TraceEntry,
};
pub use scores::{compute_scores, distance_matrix, scores_from_matrix, Scores};
pub use select::{select_clustering, threshold, SelectionResult};

/// Merges the mergeable pair of a clustering, returning the (K-1)-clustering.
pub fn merge_step(clustering: &Clustering) -> crate::error::Result<Clustering> {
    let s = compute_scores(clustering)?;
    clustering.merge(s.pair.0, s.pair.1)
}
