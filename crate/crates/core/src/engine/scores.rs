use super::clustering::Clustering;
use crate::error::{Error, Result};
use crate::stats::{cluster_distance, DistanceMatrix};

/// Per-cluster scores, partners and the clustering score of one clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    /// `eta[j] = min_{l != j} d[j][l]`
    pub eta: Vec<f64>,
    /// Cluster attaining `eta[j]`.
    pub partners: Vec<usize>,
    /// `min_j eta[j]`
    pub gamma: f64,
    /// `(i*, j*)`: the cluster attaining `gamma` and its partner.
    pub pair: (usize, usize),
}

/// Full distance matrix of a clustering: `d[k][l]` compares `W_k` with `B_kl`.
pub fn distance_matrix(clustering: &Clustering) -> Result<DistanceMatrix> {
    if let Some(k) = (0..clustering.k()).find(|&k| clustering.size(k) < 3) {
        return Err(Error::TooFewAngles {
            count: clustering.within(k).count,
        });
    }
    DistanceMatrix::from_fn(clustering.k(), |k, l| {
        cluster_distance(clustering.within(k), clustering.between(k, l))
    })
}

/// Scores from a precomputed distance matrix. Ties go to the smaller cluster
/// index, then the smaller partner index.
pub fn scores_from_matrix(d: &DistanceMatrix) -> Result<Scores> {
    let k = d.size();
    if k < 2 {
        return Err(Error::Invalid(format!(
            "scores need at least 2 clusters, got {k}"
        )));
    }
    let mut eta = Vec::with_capacity(k);
    let mut partners = Vec::with_capacity(k);
    for j in 0..k {
        let (best_l, best) = (0..k).filter(|&l| l != j).map(|l| (l, d.get(j, l))).fold(
            (usize::MAX, f64::INFINITY),
            |acc, (l, v)| {
                if v < acc.1 || acc.0 == usize::MAX {
                    (l, v)
                } else {
                    acc
                }
            },
        );
        eta.push(best);
        partners.push(best_l);
    }
    let mut i_star = 0;
    for j in 1..k {
        if eta[j] < eta[i_star] {
            i_star = j;
        }
    }
    Ok(Scores {
        gamma: eta[i_star],
        pair: (i_star, partners[i_star]),
        eta,
        partners,
    })
}

/// Scores of a clustering, with every cluster required to hold at least three
/// points.
pub fn compute_scores(clustering: &Clustering) -> Result<Scores> {
    scores_from_matrix(&distance_matrix(clustering)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_by_inspection() {
        let d = DistanceMatrix::from_rows(&[
            vec![f64::NAN, 0.1, 0.5],
            vec![0.2, f64::NAN, 0.9],
            vec![0.5, 0.8, f64::NAN],
        ])
        .unwrap();
        let s = scores_from_matrix(&d).unwrap();
        assert_eq!(s.eta, vec![0.1, 0.2, 0.5]);
        assert_eq!(s.partners, vec![1, 0, 0]);
        assert_eq!(s.gamma, 0.1);
        assert_eq!(s.pair, (0, 1));
    }

    #[test]
    fn two_clusters_single_choice() {
        let d = DistanceMatrix::from_rows(&[vec![0.0, 0.7], vec![0.3, 0.0]]).unwrap();
        let s = scores_from_matrix(&d).unwrap();
        assert_eq!(s.gamma, 0.3);
        assert_eq!(s.pair, (1, 0));
        let d = DistanceMatrix::from_rows(&[vec![0.0, 0.3], vec![0.7, 0.0]]).unwrap();
        let s = scores_from_matrix(&d).unwrap();
        assert_eq!(s.gamma, 0.3);
        assert_eq!(s.pair, (0, 1));
    }

    #[test]
    fn ties_prefer_smallest_index() {
        let d = DistanceMatrix::from_rows(&[
            vec![0.0, 0.4, 0.4],
            vec![0.4, 0.0, 0.9],
            vec![0.9, 0.4, 0.0],
        ])
        .unwrap();
        let s = scores_from_matrix(&d).unwrap();
        assert_eq!(s.partners[0], 1);
        assert_eq!(s.partners[2], 1);
        assert_eq!(s.pair, (0, 1));
    }

    #[test]
    fn single_cluster_has_no_scores() {
        let d = DistanceMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(scores_from_matrix(&d).is_err());
    }
}
