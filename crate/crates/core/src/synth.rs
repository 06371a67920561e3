//! Synthetic data: points on random linear subspaces and a Dirichlet-process
//! Gaussian mixture.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::DataSet;

/// Shape of a union-of-subspaces dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSpec {
    /// Ambient dimension.
    pub n: usize,
    /// Dimension of every subspace, one entry per subspace.
    pub dims: Vec<usize>,
    /// Total number of points.
    pub n_points: usize,
    pub seed: u64,
}

impl SubspaceSpec {
    /// `l` subspaces of common dimension `r`.
    pub fn new(n: usize, r: usize, l: usize, n_points: usize, seed: u64) -> Result<Self> {
        Self::with_dims(n, vec![r; l], n_points, seed)
    }

    pub fn with_dims(n: usize, dims: Vec<usize>, n_points: usize, seed: u64) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Invalid("need at least one subspace".into()));
        }
        if let Some(&r) = dims.iter().find(|&&r| r < 2 || r >= n) {
            return Err(Error::Invalid(format!(
                "subspace dimension {r} outside [2, {n})"
            )));
        }
        if n_points < 3 * dims.len() {
            return Err(Error::Invalid(format!(
                "{n_points} points cannot give {} subspaces three points each",
                dims.len()
            )));
        }
        Ok(Self {
            n,
            dims,
            n_points,
            seed,
        })
    }

    pub fn l(&self) -> usize {
        self.dims.len()
    }

    /// Points per subspace, as equal as possible (earlier subspaces take the
    /// remainder).
    pub fn counts(&self) -> Vec<usize> {
        let l = self.l();
        (0..l)
            .map(|k| self.n_points / l + usize::from(k < self.n_points % l))
            .collect()
    }
}

/// Dirichlet-process mixture parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DPSpec {
    pub n: usize,
    pub n_points: usize,
    /// Standard deviation of cluster centroids.
    pub rho: f64,
    /// Standard deviation of points around their centroid.
    pub sigma: f64,
    /// Concentration of the Chinese-restaurant process.
    pub alpha: f64,
    pub seed: u64,
}

impl DPSpec {
    pub fn new(
        n: usize,
        n_points: usize,
        rho: f64,
        sigma: f64,
        alpha: f64,
        seed: u64,
    ) -> Result<Self> {
        if n < 2 || n_points < 3 {
            return Err(Error::Invalid(format!(
                "need n >= 2 and N >= 3, got n={n}, N={n_points}"
            )));
        }
        for (name, v) in [("rho", rho), ("sigma", sigma), ("alpha", alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            n,
            n_points,
            rho,
            sigma,
            alpha,
            seed,
        })
    }
}

/// Coordinate law inside each subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coords {
    Normal,
    Uniform,
}

/// A generated subspace dataset together with the bases that produced it.
#[derive(Debug, Clone)]
pub struct SubspaceSample {
    /// Unit-norm points with ground-truth labels.
    pub data: DataSet,
    /// Orthonormal `n x r_k` basis of every subspace.
    pub bases: Vec<DMatrix<f64>>,
    /// For shared-pool generation, the pool columns each subspace uses.
    pub pool_indices: Option<Vec<Vec<usize>>>,
}

/// Haar-distributed orthonormal `n x r` matrix.
fn haar_basis(n: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, r, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    for (j, d) in rdiag.iter().enumerate() {
        if *d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn draw_coords(r: usize, coords: Coords, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let c = match coords {
            Coords::Normal => DVector::from_fn(r, |_, _| rng.sample(StandardNormal)),
            Coords::Uniform => DVector::from_fn(r, |_, _| rng.random::<f64>()),
        };
        if c.norm() > 1e-12 {
            return c;
        }
    }
}

/// Points on random subspaces. With `shared_pool`, one global orthonormal
/// basis of `R^n` is drawn and each subspace picks its own `r_k` columns of
/// it without replacement, so different subspaces may share directions.
pub fn sample_subspaces(
    spec: &SubspaceSpec,
    coords: Coords,
    shared_pool: bool,
) -> Result<SubspaceSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (bases, pool_indices) = if shared_pool {
        let pool = haar_basis(spec.n, spec.n, &mut rng);
        let picks: Vec<Vec<usize>> = spec
            .dims
            .iter()
            .map(|&r| sample(&mut rng, spec.n, r).into_vec())
            .collect();
        let bases: Vec<DMatrix<f64>> = picks.iter().map(|idx| pool.select_columns(idx)).collect();
        (bases, Some(picks))
    } else {
        let bases = spec
            .dims
            .iter()
            .map(|&r| haar_basis(spec.n, r, &mut rng))
            .collect();
        (bases, None)
    };

    let counts = spec.counts();
    let mut points = Vec::with_capacity(spec.n_points * spec.n);
    let mut labels = Vec::with_capacity(spec.n_points);
    for (k, (basis, &count)) in bases.iter().zip(&counts).enumerate() {
        for _ in 0..count {
            let x = basis * draw_coords(basis.ncols(), coords, &mut rng);
            let norm = x.norm();
            points.extend(x.iter().map(|v| v / norm));
            labels.push(k);
        }
    }
    Ok(SubspaceSample {
        data: DataSet::new(points, spec.n, Some(labels))?,
        bases,
        pool_indices,
    })
}

/// Independent Haar subspaces, standard-normal coordinates.
pub fn gen_subspace_normal(spec: &SubspaceSpec) -> Result<DataSet> {
    Ok(sample_subspaces(spec, Coords::Normal, false)?.data)
}

/// Independent Haar subspaces, coordinates uniform on `[0, 1]`.
pub fn gen_subspace_uniform(spec: &SubspaceSpec) -> Result<DataSet> {
    Ok(sample_subspaces(spec, Coords::Uniform, false)?.data)
}

/// Subspaces spanned by columns of one shared rotated basis, coordinates
/// uniform on `[0, 1]`.
pub fn gen_subspace_dependent(spec: &SubspaceSpec) -> Result<DataSet> {
    Ok(sample_subspaces(spec, Coords::Uniform, true)?.data)
}

/// Chinese-restaurant labels for `n_points` customers; cluster ids follow
/// order of creation.
pub fn crp_labels(n_points: usize, alpha: f64, rng: &mut impl Rng) -> Vec<usize> {
    let mut sizes: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let u = rng.random::<f64>() * (i as f64 + alpha);
        let mut acc = 0.0;
        let mut pick = sizes.len();
        for (k, &s) in sizes.iter().enumerate() {
            acc += s as f64;
            if u < acc {
                pick = k;
                break;
            }
        }
        if pick == sizes.len() {
            sizes.push(0);
        }
        sizes[pick] += 1;
        labels.push(pick);
    }
    labels
}

/// Gaussian mixture with Dirichlet-process cluster labels. Points are left
/// unnormalized.
pub fn gen_dp(spec: &DPSpec) -> Result<DataSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels = crp_labels(spec.n_points, spec.alpha, &mut rng);
    let centroid_law = Normal::new(0.0, spec.rho).map_err(|e| Error::Invalid(e.to_string()))?;
    let noise_law = Normal::new(0.0, spec.sigma).map_err(|e| Error::Invalid(e.to_string()))?;
    let n_clusters = labels.iter().max().map_or(0, |m| m + 1);
    let centroids: Vec<Vec<f64>> = (0..n_clusters)
        .map(|_| (0..spec.n).map(|_| centroid_law.sample(&mut rng)).collect())
        .collect();
    let mut points = Vec::with_capacity(spec.n_points * spec.n);
    for &k in &labels {
        loop {
            let x: Vec<f64> = centroids[k]
                .iter()
                .map(|c| c + noise_law.sample(&mut rng))
                .collect();
            if x.iter().any(|v| v.abs() > 1e-300) {
                points.extend(x);
                break;
            }
        }
    }
    DataSet::new(points, spec.n, Some(labels))
}
