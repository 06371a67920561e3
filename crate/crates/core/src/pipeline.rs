//! End-to-end runs, benchmark campaigns, traces and bound tables.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, t_min, BoundReport, SeparationParams};
use crate::engine::{
    initial_clustering, run_merging, select_clustering, Clustering, MergeRun, SelectionResult,
};
use crate::error::{Error, Result};
use crate::geometry::{compute_angles, normalize_rows, AngleCache, DataSet};
use crate::metrics::{abs_l_error, clustering_error, nmi, LabelPair};
use crate::synth::{
    gen_dp, gen_subspace_dependent, gen_subspace_normal, gen_subspace_uniform, DPSpec, SubspaceSpec,
};

pub const REPORT_SCHEMA: u32 = 1;
pub const HIST_BINS: usize = 50;

/// Where the initial clustering comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSource {
    /// Built-in ally construction, seeded.
    Allies { seed: u64 },
    /// Externally supplied per-point labels.
    Labels(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub gamma: f64,
    /// `null` when infinite.
    pub zeta: Option<f64>,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub n_points: usize,
    pub dim: usize,
    pub initial_clusters: usize,
    pub l_hat: usize,
    pub crossed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_true: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ce: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub wall_ms: f64,
    pub labels: Vec<usize>,
}

/// Everything produced by one clustering run.
#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub angles: AngleCache,
    pub initial: Clustering,
    /// `None` when the initial clustering already has a single cluster.
    pub merge: Option<MergeRun>,
    pub selection: SelectionResult,
}

/// Normalize, compute angles, build the initial clustering, merge, select.
/// Ground-truth labels on the dataset, if any, are scored.
pub fn run_clustering(data: &DataSet, init: &InitSource) -> Result<RunOutput> {
    let start = Instant::now();
    let unit = normalize_rows(data)?;
    let angles = compute_angles(&unit);
    let initial = match init {
        InitSource::Allies { seed } => initial_clustering(&angles, *seed)?,
        InitSource::Labels(labels) => {
            let c = Clustering::from_labels(labels, &angles)?;
            if let Some(k) = (0..c.k()).find(|&k| c.size(k) < 3) {
                return Err(Error::Invalid(format!(
                    "initial cluster {k} has {} points; at least 3 are needed",
                    c.size(k)
                )));
            }
            c
        }
    };
    let (merge, selection) = if initial.k() < 2 {
        let selection = SelectionResult {
            l_hat: 1,
            crossed: false,
            labels: vec![0; data.len()],
        };
        (None, selection)
    } else {
        let run = run_merging(&initial)?;
        let selection = select_clustering(&run)?;
        (Some(run), selection)
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let (l_true, ce, nmi_value) = match data.labels() {
        Some(truth) => {
            let pair = LabelPair::from_raw(truth, &selection.labels)?;
            (
                Some(pair.l_truth()),
                Some(clustering_error(&pair)),
                Some(nmi(&pair)),
            )
        }
        None => (None, None, None),
    };
    let trace = merge
        .as_ref()
        .map(|m| {
            m.trace
                .entries
                .iter()
                .map(|e| TraceRow {
                    k: e.k,
                    gamma: e.gamma,
                    zeta: e.zeta.is_finite().then_some(e.zeta),
                    t: e.t,
                })
                .collect()
        })
        .unwrap_or_default();
    let report = RunReport {
        schema: REPORT_SCHEMA,
        n_points: data.len(),
        dim: data.dim(),
        initial_clusters: initial.k(),
        l_hat: selection.l_hat,
        crossed: selection.crossed,
        l_true,
        ce,
        nmi: nmi_value,
        trace,
        wall_ms,
        labels: selection.labels.clone(),
    };
    Ok(RunOutput {
        report,
        angles,
        initial,
        merge,
        selection,
    })
}

/// Synthetic data model of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Normal {
        n: usize,
        r: usize,
        l: usize,
        n_points: usize,
    },
    Uniform {
        n: usize,
        r: usize,
        l: usize,
        n_points: usize,
    },
    Dependent {
        n: usize,
        r: usize,
        l: usize,
        n_points: usize,
    },
    Dp {
        n: usize,
        n_points: usize,
        rho: f64,
        sigma: f64,
        alpha: f64,
    },
}

impl ModelSpec {
    pub fn generate(&self, seed: u64) -> Result<DataSet> {
        match *self {
            ModelSpec::Normal { n, r, l, n_points } => {
                gen_subspace_normal(&SubspaceSpec::new(n, r, l, n_points, seed)?)
            }
            ModelSpec::Uniform { n, r, l, n_points } => {
                gen_subspace_uniform(&SubspaceSpec::new(n, r, l, n_points, seed)?)
            }
            ModelSpec::Dependent { n, r, l, n_points } => {
                gen_subspace_dependent(&SubspaceSpec::new(n, r, l, n_points, seed)?)
            }
            ModelSpec::Dp {
                n,
                n_points,
                rho,
                sigma,
                alpha,
            } => gen_dp(&DPSpec::new(n, n_points, rho, sigma, alpha, seed)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub l_true: usize,
    pub l_hat: usize,
    pub crossed: bool,
    pub ce: f64,
    pub nmi: f64,
    pub abs_l_error: usize,
    pub wall_ms: f64,
    /// Whether the trace crosses exactly at `l_hat` and never above it.
    pub clean_crossing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary {
                mean: f64::NAN,
                median: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, median, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub model: ModelSpec,
    pub trials: Vec<TrialResult>,
    pub ce: Summary,
    pub nmi: Summary,
    pub abs_l_error: Summary,
}

/// Whether `gamma <= zeta` for every K above `l_hat` and `gamma > zeta` at it.
pub fn crossing_is_clean(run: &MergeRun, l_hat: usize) -> bool {
    run.trace.entries.iter().all(|e| {
        if e.k > l_hat {
            !e.crosses()
        } else if e.k == l_hat {
            e.crosses()
        } else {
            true
        }
    }) && run.trace.get_k(l_hat).is_some()
}

/// One seeded trial: generate, cluster with the same seed, score.
pub fn run_trial(model: &ModelSpec, trial: usize, seed: u64) -> Result<TrialResult> {
    let data = model.generate(seed)?;
    let out = run_clustering(&data, &InitSource::Allies { seed })?;
    let r = &out.report;
    let l_true = r.l_true.expect("synthetic data is labeled");
    let clean_crossing = out
        .merge
        .as_ref()
        .is_some_and(|m| r.crossed && crossing_is_clean(m, r.l_hat));
    Ok(TrialResult {
        trial,
        seed,
        l_true,
        l_hat: r.l_hat,
        crossed: r.crossed,
        ce: r.ce.expect("labeled"),
        nmi: r.nmi.expect("labeled"),
        abs_l_error: abs_l_error(l_true, r.l_hat),
        wall_ms: r.wall_ms,
        clean_crossing,
    })
}

/// Runs `trials` trials in parallel with seeds `base_seed + trial`.
pub fn run_bench(model: &ModelSpec, trials: usize, base_seed: u64) -> Result<BenchReport> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let mut results = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(model, t, base_seed.wrapping_add(t as u64)))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|r| r.trial);
    let col = |f: fn(&TrialResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
    Ok(BenchReport {
        model: model.clone(),
        ce: Summary::of(&col(|r| r.ce)),
        nmi: Summary::of(&col(|r| r.nmi)),
        abs_l_error: Summary::of(&col(|r| r.abs_l_error as f64)),
        trials: results,
    })
}

/// Bin counts over `[0, pi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of(values: impl IntoIterator<Item = f64>, bins: usize) -> Histogram {
        let width = PI / bins as f64;
        let mut counts = vec![0u64; bins];
        for v in values {
            let b = ((v / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Histogram {
            lo: (0..bins).map(|b| b as f64 * width).collect(),
            hi: (0..bins).map(|b| (b + 1) as f64 * width).collect(),
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Histograms of all within-cluster and all between-cluster angles of a
/// labeling.
pub fn angle_histograms(
    labels: &[usize],
    angles: &AngleCache,
    bins: usize,
) -> (Histogram, Histogram) {
    let n = labels.len();
    let (mut within, mut between) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in i + 1..n {
            let th = angles.theta(i, j);
            if labels[i] == labels[j] {
                within.push(th);
            } else {
                between.push(th);
            }
        }
    }
    (Histogram::of(within, bins), Histogram::of(between, bins))
}

/// One row of a bound table; `report` is `None` when no finite sample count
/// exists for the separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub m: f64,
    pub r: f64,
    pub t: Option<usize>,
    pub report: Option<BoundReport>,
    pub no_finite_t: bool,
}

/// Bound quantities for every `(M, R)` pair, at each `t` in `ts`, or at the
/// minimum sample count when `ts` is empty.
pub fn bound_table(ms: &[f64], rs: &[f64], ts: &[usize]) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for &m in ms {
        for &r in rs {
            let params = SeparationParams::new(m, r)?;
            let targets: Vec<Option<usize>> = if ts.is_empty() {
                match t_min(&params) {
                    Ok(t) => vec![Some(t)],
                    Err(Error::NoFiniteT { .. }) => vec![None],
                    Err(e) => return Err(e),
                }
            } else {
                ts.iter().map(|&t| Some(t)).collect()
            };
            for t in targets {
                let report = t.map(|t| bound_report(t, &params)).transpose()?;
                rows.push(BoundRow {
                    m,
                    r,
                    t,
                    no_finite_t: report.as_ref().is_none_or(|b| b.t_min.is_none()),
                    report,
                });
            }
        }
    }
    Ok(rows)
}
