//! Angle sets as additive sufficient statistics, their moments, and the
//! empirical Bhattacharyya distance between a within-cluster and a
//! between-cluster angle population.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AngleCache;

/// Lower bound applied to every variance estimate, in rad^2.
///
/// Clusters of duplicated points have zero empirical variance; the floor keeps
/// the distance finite (and large).
pub const VAR_FLOOR: f64 = 1e-12;

/// Sum, sum of squares and count of a set of angles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub sum: f64,
    pub sumsq: f64,
    pub count: u64,
}

impl PairStats {
    pub const EMPTY: PairStats = PairStats {
        sum: 0.0,
        sumsq: 0.0,
        count: 0,
    };

    #[inline]
    pub fn push(&mut self, theta: f64) {
        self.sum += theta;
        self.sumsq += theta * theta;
        self.count += 1;
    }

    pub fn from_angles<I: IntoIterator<Item = f64>>(angles: I) -> Self {
        let mut s = Self::EMPTY;
        angles.into_iter().for_each(|t| s.push(t));
        s
    }

    /// Statistics of the union of two disjoint angle sets.
    #[inline]
    #[must_use]
    pub fn combine(self, other: PairStats) -> PairStats {
        PairStats {
            sum: self.sum + other.sum,
            sumsq: self.sumsq + other.sumsq,
            count: self.count + other.count,
        }
    }

    /// True when every field agrees with `other` to `rel` relative tolerance.
    pub fn approx_eq(&self, other: &PairStats, rel: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300);
        self.count == other.count && close(self.sum, other.sum) && close(self.sumsq, other.sumsq)
    }
}

impl std::ops::Add for PairStats {
    type Output = PairStats;
    fn add(self, rhs: PairStats) -> PairStats {
        self.combine(rhs)
    }
}

impl std::ops::AddAssign for PairStats {
    fn add_assign(&mut self, rhs: PairStats) {
        *self = self.combine(rhs);
    }
}

/// Sample mean and (floored) unbiased sample variance of an angle set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub var: f64,
    pub count: u64,
}

impl MomentPair {
    /// Moments given directly; the variance is floored at [`VAR_FLOOR`].
    pub fn new(mean: f64, var: f64, count: u64) -> Self {
        Self {
            mean,
            var: var.max(VAR_FLOOR),
            count,
        }
    }
}

/// Mean and variance (with the `count - 1` divisor) from sufficient statistics.
pub fn moments(stats: &PairStats) -> Result<MomentPair> {
    if stats.count < 2 {
        return Err(Error::TooFewAngles { count: stats.count });
    }
    let n = stats.count as f64;
    let mean = stats.sum / n;
    let var = (stats.sumsq - stats.sum * stats.sum / n) / (n - 1.0);
    Ok(MomentPair::new(mean, var, stats.count))
}

/// Bhattacharyya distance between N(w.mean, w.var) and N(b.mean, b.var).
pub fn bhattacharyya_empirical(w: &MomentPair, b: &MomentPair) -> f64 {
    let (vw, vb) = (w.var.max(VAR_FLOOR), b.var.max(VAR_FLOOR));
    let dm = w.mean - b.mean;
    let location = dm * dm / (vw + vb);
    let ratio = vw / vb;
    // ln(0.25 (r + 1/r) + 0.5) = ln((1 + r)^2 / (4 r)); the second form loses
    // nothing when r is near 1 and stays non-negative.
    let scale = 2.0 * (0.5 * (ratio.sqrt() + 1.0 / ratio.sqrt())).ln();
    0.25 * (location + scale.max(0.0))
}

/// Number of independent angle samples available for a cluster pair of the
/// given sizes: `min(floor(omega_i / 2), omega_j)`.
pub fn t_pair(omega_i: usize, omega_j: usize) -> usize {
    (omega_i / 2).min(omega_j)
}

/// Statistics over all unordered within-cluster angles.
pub fn within_stats(cluster: &[usize], angles: &AngleCache) -> PairStats {
    let mut s = PairStats::EMPTY;
    for (a, &i) in cluster.iter().enumerate() {
        for &j in &cluster[a + 1..] {
            s.push(angles.theta(i, j));
        }
    }
    s
}

/// Statistics over all cross angles between two disjoint clusters.
pub fn between_stats(cluster_k: &[usize], cluster_l: &[usize], angles: &AngleCache) -> PairStats {
    let mut s = PairStats::EMPTY;
    for &i in cluster_k {
        for &j in cluster_l {
            s.push(angles.theta(i, j));
        }
    }
    s
}

/// Distance from cluster k to cluster l: the Bhattacharyya distance between
/// the moments of `W_k` and of `B_kl`, using every available angle.
pub fn cluster_distance(within_k: &PairStats, between_kl: &PairStats) -> Result<f64> {
    let w = moments(within_k)?;
    let b = moments(between_kl)?;
    Ok(bhattacharyya_empirical(&w, &b))
}

/// Dense K-by-K matrix of cluster distances. `d[k][l]` uses `W_k`, so the
/// matrix is not symmetric in general. Diagonal entries are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    k: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut d = vec![f64::NAN; k * k];
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    d[a * k + b] = f(a, b)?;
                }
            }
        }
        Ok(Self { k, d })
    }

    /// Builds a matrix from explicit rows; diagonal entries are ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid("distance matrix must be square".into()));
        }
        Self::from_fn(k, |a, b| Ok(rows[a][b]))
    }

    pub fn size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.d[k * self.k + l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AngleCache;
    use proptest::prelude::*;

    #[test]
    fn three_sample_moments() {
        let m = moments(&PairStats::from_angles([0.1, 0.2, 0.3])).unwrap();
        assert!((m.mean - 0.2).abs() < 1e-15);
        assert!((m.var - 0.01).abs() < 1e-15);
        assert_eq!(m.count, 3);
    }

    #[test]
    fn constant_angles_hit_the_floor() {
        let m = moments(&PairStats::from_angles([0.7, 0.7])).unwrap();
        assert!((m.mean - 0.7).abs() < 1e-15);
        assert_eq!(m.var, VAR_FLOOR);
    }

    #[test]
    fn single_angle_is_too_few() {
        assert!(matches!(
            moments(&PairStats::from_angles([0.3])),
            Err(Error::TooFewAngles { count: 1 })
        ));
        assert!(matches!(
            moments(&PairStats::EMPTY),
            Err(Error::TooFewAngles { count: 0 })
        ));
    }

    #[test]
    fn bhattacharyya_reference_values() {
        let same = MomentPair::new(0.5, 0.01, 10);
        assert_eq!(bhattacharyya_empirical(&same, &same), 0.0);

        // 0.25 * ln(0.25 * (1/4 + 4) + 0.5) = 0.25 * ln(1.5625)
        let d = bhattacharyya_empirical(
            &MomentPair::new(0.0, 1.0, 10),
            &MomentPair::new(0.0, 4.0, 10),
        );
        assert!((d - 0.25 * 1.5625f64.ln()).abs() < 1e-15);
        assert!((d - 0.111_571_775_657_104_9).abs() < 1e-12);

        let d = bhattacharyya_empirical(
            &MomentPair::new(1.0, 1.0, 10),
            &MomentPair::new(0.0, 1.0, 10),
        );
        assert!((d - 0.125).abs() < 1e-15);
    }

    #[test]
    fn gaussian_approximation_reference_distance() {
        let w = MomentPair::new(std::f64::consts::FRAC_PI_2, 1.0 / 98.0, 100);
        let b = MomentPair::new(std::f64::consts::FRAC_PI_2, 1.0 / 8.0, 100);
        let expected = 0.25 * (0.25 * (8.0 / 98.0 + 98.0 / 8.0) + 0.5f64).ln();
        let d = bhattacharyya_empirical(&w, &b);
        assert!((d - expected).abs() < 1e-14);
        assert!((d - 0.3195).abs() < 5e-4);
    }

    #[test]
    fn t_pair_examples() {
        assert_eq!(t_pair(10, 7), 5);
        assert_eq!(t_pair(4, 10), 2);
        assert_eq!(t_pair(3, 3), 1);
    }

    fn cache_for(n: usize, f: impl Fn(usize, usize) -> f64) -> AngleCache {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                t.push(f(i, j));
            }
        }
        AngleCache::from_upper_triangle(n, t).unwrap()
    }

    #[test]
    fn within_and_between_enumeration() {
        // angles (0,1)=0.1 (0,2)=0.2 (1,2)=0.3, everything else 0.4
        let cache = cache_for(6, |i, j| match (i, j) {
            (0, 1) => 0.1,
            (0, 2) => 0.2,
            (1, 2) => 0.3,
            _ => 0.4,
        });
        let w = within_stats(&[0, 1, 2], &cache);
        assert!((w.sum - 0.6).abs() < 1e-15);
        assert!((w.sumsq - 0.14).abs() < 1e-15);
        assert_eq!(w.count, 3);
        assert_eq!(within_stats(&[4], &cache), PairStats::EMPTY);
        assert_eq!(within_stats(&[0, 1, 2, 3], &cache).count, 6);

        assert_eq!(between_stats(&[0, 1], &[3, 4, 5], &cache).count, 6);
        let single = between_stats(&[3], &[5], &cache);
        assert!((single.sum - 0.4).abs() < 1e-15);
        assert!((single.sumsq - 0.16).abs() < 1e-15);
        assert_eq!(single.count, 1);
        assert_eq!(
            between_stats(&[0, 2], &[1, 5], &cache),
            between_stats(&[1, 5], &[0, 2], &cache)
        );
    }

    #[test]
    fn distance_needs_two_within_angles() {
        let w = PairStats::from_angles([0.5]);
        let b = PairStats::from_angles([0.5, 0.6, 0.7]);
        assert!(matches!(
            cluster_distance(&w, &b),
            Err(Error::TooFewAngles { .. })
        ));
    }

    #[test]
    fn distance_is_asymmetric() {
        // W_k tight, W_l wide, shared between set
        let wk = PairStats::from_angles([1.5, 1.52, 1.54]);
        let wl = PairStats::from_angles([1.0, 1.5, 2.0]);
        let b = PairStats::from_angles([1.2, 1.6, 1.9, 1.4]);
        let dkl = cluster_distance(&wk, &b).unwrap();
        let dlk = cluster_distance(&wl, &b).unwrap();
        assert!(dkl >= 0.0 && dlk >= 0.0);
        assert!((dkl - dlk).abs() > 1e-3);
    }

    #[test]
    fn separation_grows_with_mean_gap() {
        for &(vw, vb) in &[(0.01, 0.01), (0.01, 0.1), (1.0, 0.25)] {
            let mut prev = -1.0;
            for step in 0..50 {
                let gap = step as f64 * 0.05;
                let d = bhattacharyya_empirical(
                    &MomentPair::new(1.0 + gap, vw, 10),
                    &MomentPair::new(1.0, vb, 10),
                );
                assert!(d > prev);
                prev = d;
            }
        }
    }

    proptest! {
        #[test]
        fn distance_is_nonnegative(mw in -3.0..3.0f64, mb in -3.0..3.0f64,
                                   vw in 1e-8..10.0f64, vb in 1e-8..10.0f64) {
            let w = MomentPair::new(mw, vw, 5);
            let b = MomentPair::new(mb, vb, 5);
            prop_assert!(bhattacharyya_empirical(&w, &b) >= 0.0);
            prop_assert!(bhattacharyya_empirical(&w, &w).abs() <= 1e-12);
        }

        #[test]
        fn sufficient_statistics_match_two_pass(
            angles in prop::collection::vec(0.0..std::f64::consts::PI, 2..2000),
        ) {
            let m = moments(&PairStats::from_angles(angles.iter().copied())).unwrap();
            let n = angles.len() as f64;
            let mean = angles.iter().sum::<f64>() / n;
            let var = angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((m.mean - mean).abs() <= 1e-9 * mean.abs().max(1e-12));
            if var > 1e-6 {
                prop_assert!((m.var - var).abs() <= 1e-9 * var);
            }
        }

        #[test]
        fn combine_equals_concatenation(
            a in prop::collection::vec(0.0..3.0f64, 0..50),
            b in prop::collection::vec(0.0..3.0f64, 0..50),
        ) {
            let joined = PairStats::from_angles(a.iter().chain(&b).copied());
            let combined = PairStats::from_angles(a.iter().copied()) + PairStats::from_angles(b.iter().copied());
            prop_assert!(joined.approx_eq(&combined, 1e-12));
            if joined.count >= 1 {
                let n = joined.count as f64;
                prop_assert!(joined.sumsq >= joined.sum * joined.sum / n - 1e-9);
            }
        }
    }

    #[test]
    fn large_set_sufficient_statistics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let angles: Vec<f64> = (0..100_000)
            .map(|_| 1.2 + 0.3 * rng.random::<f64>())
            .collect();
        let m = moments(&PairStats::from_angles(angles.iter().copied())).unwrap();
        let n = angles.len() as f64;
        let mean = angles.iter().sum::<f64>() / n;
        let var = angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((m.mean - mean).abs() <= 1e-9 * mean);
        assert!((m.var - var).abs() <= 1e-9 * var);
    }
}
