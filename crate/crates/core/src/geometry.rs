//! Point storage, projection onto the unit sphere and the cached pairwise angles.
//!
//! All pairwise angles are computed once and kept in a flat upper-triangular
//! array. Everything downstream (sufficient statistics, ally search) reads from
//! [`AngleCache`] and never from the raw points again.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};

const ZERO_NORM: f64 = 1e-300;

/// N points in R^n stored row-major, with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    points: Vec<f64>,
    n_points: usize,
    dim: usize,
    labels: Option<Vec<usize>>,
}

impl DataSet {
    pub fn new(points: Vec<f64>, dim: usize, labels: Option<Vec<usize>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DegenerateInput(format!(
                "ambient dimension must be at least 2, got {dim}"
            )));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::Invalid(format!(
                "{} values do not form rows of length {dim}",
                points.len()
            )));
        }
        let n_points = points.len() / dim;
        if n_points < 3 {
            return Err(Error::DegenerateInput(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n_points {
                return Err(Error::Invalid(format!(
                    "{} labels for {n_points} points",
                    l.len()
                )));
            }
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite coordinate".into()));
        }
        Ok(Self {
            points,
            n_points,
            dim,
            labels,
        })
    }

    /// Builds a data set from a slice of rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Invalid("rows have unequal lengths".into()));
        }
        Self::new(rows.concat(), dim, labels)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n_points {
                return Err(Error::Invalid(format!(
                    "{} labels for {} points",
                    l.len(),
                    self.n_points
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// Reads one point per line of comma-separated reals. With `labeled`, the
    /// final column is parsed as an integer ground-truth label.
    pub fn read_csv(path: impl AsRef<Path>, labeled: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut dim = None;
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let mut fields: Vec<&str> = record.iter().collect();
            if labeled {
                let last = fields
                    .pop()
                    .ok_or_else(|| Error::Invalid(format!("line {}: empty record", line + 1)))?;
                let label: usize = last.parse().map_err(|_| {
                    Error::Invalid(format!("line {}: bad label {last:?}", line + 1))
                })?;
                labels.push(label);
            }
            match dim {
                None => dim = Some(fields.len()),
                Some(d) if d != fields.len() => {
                    return Err(Error::Invalid(format!(
                        "line {}: expected {d} coordinates, found {}",
                        line + 1,
                        fields.len()
                    )))
                }
                _ => {}
            }
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::Invalid(format!("line {}: bad number {f:?}", line + 1)))?;
                points.push(v);
            }
        }
        let dim = dim.ok_or_else(|| Error::Invalid("empty input".into()))?;
        Self::new(points, dim, labeled.then_some(labels))
    }

    /// Writes one point per line; labels (when present) go in a trailing column.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scales every row to unit Euclidean norm.
pub fn normalize_rows(data: &DataSet) -> Result<DataSet> {
    let mut points = data.points.clone();
    for (i, row) in points.chunks_exact_mut(data.dim).enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm >= ZERO_NORM) {
            return Err(Error::ZeroRow(i));
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(DataSet {
        points,
        ..data.clone()
    })
}

/// Position of the (i, j) entry, i < j, in a row-major upper-triangular array
/// of an `n`-by-`n` matrix without diagonal.
#[inline]
pub(crate) fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairwise angles between the (normalized) points.
#[derive(Debug)]
pub struct AngleCache {
    n: usize,
    theta: Vec<f64>,
    acute: Vec<f64>,
    reads: AtomicU64,
}

impl AngleCache {
    /// Builds a cache directly from a flat upper-triangular angle array.
    /// Acute angles are derived as `min(theta, pi - theta)`.
    pub fn from_upper_triangle(n: usize, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::Invalid(format!(
                "expected {} angles for {n} points, got {}",
                n * n.saturating_sub(1) / 2,
                theta.len()
            )));
        }
        if theta
            .iter()
            .any(|t| !(0.0..=std::f64::consts::PI).contains(t))
        {
            return Err(Error::Domain("angles must lie in [0, pi]".into()));
        }
        let acute = theta
            .iter()
            .map(|&t| t.min(std::f64::consts::PI - t))
            .collect();
        Ok(Self {
            n,
            theta,
            acute,
            reads: AtomicU64::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Angle between points `i` and `j` in radians; symmetric in its arguments.
    /// `theta(i, i)` is zero.
    #[inline]
    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.reads.fetch_add(1, Ordering::Relaxed);
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.theta[tri_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.theta[tri_index(self.n, j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// `acos(|x_i . x_j|)`, in [0, pi/2].
    #[inline]
    pub fn acute(&self, i: usize, j: usize) -> f64 {
        self.reads.fetch_add(1, Ordering::Relaxed);
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.acute[tri_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.acute[tri_index(self.n, j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Number of entry lookups served so far.
    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    /// The raw upper-triangular angle array, row-major over i < j.
    pub fn upper_triangle(&self) -> &[f64] {
        &self.theta
    }
}

/// Computes every pairwise angle `acos(clamp(x_i . x_j, -1, 1))`.
///
/// Rows are expected to be normalized already. Each entry is written exactly
/// once, so the parallel schedule does not affect the result.
pub fn compute_angles(data: &DataSet) -> AngleCache {
    let n = data.len();
    let total = n * (n - 1) / 2;
    let mut theta = vec![0.0; total];
    let mut acute = vec![0.0; total];

    let mut rows: Vec<(usize, &mut [f64], &mut [f64])> = Vec::with_capacity(n);
    let (mut t_rest, mut a_rest) = (theta.as_mut_slice(), acute.as_mut_slice());
    for i in 0..n.saturating_sub(1) {
        let len = n - i - 1;
        let (t_row, t_tail) = t_rest.split_at_mut(len);
        let (a_row, a_tail) = a_rest.split_at_mut(len);
        rows.push((i, t_row, a_row));
        t_rest = t_tail;
        a_rest = a_tail;
    }

    rows.into_par_iter().for_each(|(i, t_row, a_row)| {
        let xi = data.row(i);
        for (off, (t, a)) in t_row.iter_mut().zip(a_row.iter_mut()).enumerate() {
            let xj = data.row(i + 1 + off);
            let dot: f64 = xi.iter().zip(xj).map(|(p, q)| p * q).sum();
            let c = dot.clamp(-1.0, 1.0);
            *t = c.acos();
            *a = c.abs().acos();
        }
    });

    AngleCache {
        n,
        theta,
        acute,
        reads: AtomicU64::new(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn normalizes_three_four_five() {
        let d =
            DataSet::from_rows(&[vec![3.0, 4.0], vec![1.0, 0.0], vec![0.0, 2.0]], None).unwrap();
        let x = normalize_rows(&d).unwrap();
        assert!((x.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((x.row(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(x.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn zero_row_is_rejected() {
        let d = DataSet::from_rows(
            &[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
            ],
            Some(vec![0, 1, 2]),
        )
        .unwrap();
        assert!(matches!(normalize_rows(&d), Err(Error::ZeroRow(1))));
    }

    #[test]
    fn labels_survive_normalization() {
        let d = DataSet::from_rows(
            &[vec![2.0, 0.0], vec![0.0, 5.0], vec![1.0, 1.0]],
            Some(vec![0, 1, 0]),
        )
        .unwrap();
        assert_eq!(normalize_rows(&d).unwrap().labels(), Some(&[0, 1, 0][..]));
    }

    #[test]
    fn rejects_too_few_points_and_low_dimension() {
        assert!(DataSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], None).is_err());
        assert!(DataSet::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], None).is_err());
    }

    #[test]
    fn special_angle_cases() {
        let d = DataSet::from_rows(
            &[
                vec![1.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![-1.0, 0.0, 0.0],
            ],
            None,
        )
        .unwrap();
        let a = compute_angles(&d);
        assert_eq!(a.theta(0, 1), 0.0);
        assert_eq!(a.acute(0, 1), 0.0);
        assert!((a.theta(0, 2) - FRAC_PI_2).abs() < 1e-15);
        assert!((a.acute(0, 2) - FRAC_PI_2).abs() < 1e-15);
        assert!((a.theta(0, 3) - PI).abs() < 1e-15);
        assert!(a.acute(0, 3).abs() < 1e-15);
        assert_eq!(a.theta(3, 0), a.theta(0, 3));
        assert_eq!(a.theta(2, 2), 0.0);
    }

    #[test]
    fn triangular_index_is_dense() {
        let n = 7;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(tri_index(n, i, j), k);
                k += 1;
            }
        }
    }

    #[test]
    fn near_parallel_rows_never_give_nan() {
        let eps = 1e-17;
        let d = DataSet::from_rows(
            &[
                vec![1.0, eps, 0.0],
                vec![1.0, 0.0, eps],
                vec![-1.0, -eps, 0.0],
            ],
            None,
        )
        .unwrap();
        let a = compute_angles(&normalize_rows(&d).unwrap());
        assert!(a.upper_triangle().iter().all(|t| t.is_finite()));
    }

    #[test]
    fn read_counter_tracks_lookups() {
        let d =
            DataSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], None).unwrap();
        let a = compute_angles(&normalize_rows(&d).unwrap());
        assert_eq!(a.reads(), 0);
        a.theta(0, 1);
        a.acute(1, 2);
        assert_eq!(a.reads(), 2);
    }

    #[test]
    fn csv_round_trip_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        let d = DataSet::from_rows(
            &[vec![1.5, -2.0], vec![0.25, 1.0], vec![3.0, 4.0]],
            Some(vec![2, 0, 1]),
        )
        .unwrap();
        d.write_csv(&path).unwrap();
        assert_eq!(DataSet::read_csv(&path, true).unwrap(), d);
        let unlabeled = DataSet::read_csv(&path, false).unwrap();
        assert_eq!(unlabeled.dim(), 3);
        assert!(unlabeled.labels().is_none());
    }
}
