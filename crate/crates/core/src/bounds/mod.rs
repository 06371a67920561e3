//! Closed-form probability bounds behind the merge threshold.
//!
//! * [`epsilon_t`]: probability that the distance between two clusters drawn
//!   from the same subspace exceeds `1/sqrt(t-1)`.
//! * [`delta_t`]: probability that the distance between clusters from two
//!   different subspaces falls below `1/sqrt(t-1)`.
//! * [`t_min`]: number of independent samples sufficient for [`delta_t`] to apply.
//! * [`angle_pdf`]: density of the angle between two uniform points on the
//!   unit sphere of a `p`-dimensional subspace.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use special::{ln_gamma, reg_inc_beta, reg_inc_gamma_p, reg_inc_gamma_q};

const POISSON_TAIL: f64 = 1e-14;

/// CDF of the beta prime distribution with shape parameters `a`, `b`.
pub fn beta_prime_cdf(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "beta prime cdf needs x >= 0, got {x}"
        )));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    reg_inc_beta(x / (1.0 + x), a, b)
}

/// CDF of the central chi-squared distribution with `k` degrees of freedom.
pub fn chi2_cdf(x: f64, k: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    reg_inc_gamma_p(0.5 * k, 0.5 * x)
}

/// CDF of the non-central chi-squared distribution, evaluated as a Poisson
/// mixture of central chi-squared CDFs truncated once the neglected Poisson
/// mass is below 1e-14.
pub fn noncentral_chi2_cdf(x: f64, k: f64, lambda: f64) -> Result<f64> {
    if !(k > 0.0) || !(lambda >= 0.0) || x.is_nan() {
        return Err(Error::Domain(format!(
            "non-central chi2 needs k > 0, lambda >= 0; got k={k}, lambda={lambda}"
        )));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if lambda == 0.0 {
        return chi2_cdf(x, k);
    }
    let h = 0.5 * lambda;
    let mode = h.floor();
    let w_mode = (-h + mode * h.ln() - ln_gamma(mode + 1.0)).exp();
    let term = |j: f64| chi2_cdf(x, k + 2.0 * j);

    let mut total = w_mode * term(mode)?;

    // upward from the mode
    let mut j = mode;
    let mut w = w_mode;
    loop {
        j += 1.0;
        w *= h / j;
        total += w * term(j)?;
        // the remaining tail is dominated by a geometric series of ratio h/(j+1)
        if j + 1.0 > h && w * (j + 1.0) / (j + 1.0 - h) < POISSON_TAIL {
            break;
        }
    }

    // downward from the mode
    let mut j = mode;
    let mut w = w_mode;
    while j > 0.0 {
        w *= j / h;
        j -= 1.0;
        total += w * term(j)?;
        if j < h && w * h / (h - j).max(1e-300) < POISSON_TAIL {
            break;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Failure probability for the same-subspace distance bound with `t`
/// independent samples, clamped to [0, 1].
pub fn epsilon_t(t: usize) -> Result<f64> {
    if t < 2 {
        return Err(Error::Domain(format!("epsilon_t needs t >= 2, got {t}")));
    }
    let tm1 = (t - 1) as f64;
    let c = 4.0 * ((2.0 / tm1.sqrt()).exp() - 0.5);
    let disc = (c * c - 4.0).max(0.0).sqrt();
    let (z_hi, z_lo) = ((c + disc) / 2.0, (c - disc) / 2.0);
    let mean_term = beta_prime_cdf(t as f64 / tm1.powf(1.5), 0.5, tm1)?;
    let ratio_hi = beta_prime_cdf(z_hi, tm1 / 2.0, tm1 / 2.0)?;
    let ratio_lo = beta_prime_cdf(z_lo, tm1 / 2.0, tm1 / 2.0)?;
    Ok((2.0 - mean_term - ratio_hi + ratio_lo).clamp(0.0, 1.0))
}

/// Mean and variance separation between a within-subspace angle law and a
/// between-subspace angle law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationParams {
    /// `|nu_a - nu_ab| / sqrt(rho_a^2 + rho_ab^2)`
    pub m: f64,
    /// `rho_a^2 / rho_ab^2 + rho_ab^2 / rho_a^2`
    pub r: f64,
}

impl SeparationParams {
    pub fn new(m: f64, r: f64) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("M must be finite and >= 0, got {m}")));
        }
        if !(r >= 2.0 - 1e-12) || !r.is_finite() {
            return Err(Error::Domain(format!("R must be finite and >= 2, got {r}")));
        }
        Ok(Self { m, r: r.max(2.0) })
    }

    /// From the means and variances of the two Gaussian angle laws.
    pub fn from_moments(nu_a: f64, var_a: f64, nu_ab: f64, var_ab: f64) -> Result<Self> {
        if !(var_a > 0.0) || !(var_ab > 0.0) {
            return Err(Error::Domain("variances must be positive".into()));
        }
        Self::new(
            (nu_a - nu_ab).abs() / (var_a + var_ab).sqrt(),
            var_a / var_ab + var_ab / var_a,
        )
    }

    /// Root `psi` of the quadratic that fixes the sufficient sample count.
    pub fn psi(&self) -> f64 {
        let (r, m1) = (self.r, 1.0 + self.m);
        (((r - 2.0) * m1).powi(2) + 32.0 * r * m1).sqrt() / 8.0 - (r - 2.0) * m1 / 8.0
    }
}

/// Failure probability for the different-subspace distance bound with `t`
/// independent samples.
pub fn delta_t(t: usize, params: &SeparationParams) -> Result<f64> {
    if t < 2 {
        return Err(Error::Domain(format!("delta_t needs t >= 2, got {t}")));
    }
    let tm1 = (t - 1) as f64;
    let alpha = (4.0 / tm1.sqrt()).exp();
    let upper = chi2_cdf(tm1 * alpha, tm1)?;
    let lower = chi2_cdf(tm1 * (2.0 - alpha), tm1)?;
    let var_term = (upper - lower).powi(2);
    let x = t as f64 * params.m.ln_1p() * alpha;
    let mean_term = 1.0 - noncentral_chi2_cdf(x, 1.0, t as f64 * params.m * params.m)?;
    Ok((1.0 - var_term * mean_term).clamp(0.0, 1.0))
}

/// Smallest integer sample count `ceil(1 + 16 / ln(psi)^2)`.
pub fn t_min(params: &SeparationParams) -> Result<usize> {
    let psi = params.psi();
    if !(psi > 1.0 + 1e-12) {
        return Err(Error::NoFiniteT { psi });
    }
    Ok((1.0 + 16.0 / psi.ln().powi(2)).ceil() as usize)
}

/// Density of the angle between two independent uniform points on the unit
/// sphere of a `p`-dimensional space.
pub fn angle_pdf(theta: f64, p: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain(format!("angle {theta} outside [0, pi]")));
    }
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("dimension must be >= 2, got {p}")));
    }
    let norm = (ln_gamma(p / 2.0) - ln_gamma((p - 1.0) / 2.0)).exp() / std::f64::consts::PI.sqrt();
    if p == 2.0 {
        return Ok(norm);
    }
    Ok(norm * theta.sin().powf(p - 2.0))
}

/// All bound quantities for one sample count and separation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundReport {
    pub t: usize,
    /// `1 / sqrt(t - 1)`, the merge threshold at this sample count.
    pub threshold: f64,
    pub eps_t: f64,
    pub delta_t: f64,
    pub alpha_t: f64,
    pub c: f64,
    pub m: f64,
    pub r: f64,
    pub psi_ab: f64,
    /// `None` when no finite sample count exists.
    pub t_min: Option<usize>,
}

pub fn bound_report(t: usize, params: &SeparationParams) -> Result<BoundReport> {
    if t < 2 {
        return Err(Error::Domain(format!("bound report needs t >= 2, got {t}")));
    }
    let tm1 = (t - 1) as f64;
    let t_min = match t_min(params) {
        Ok(v) => Some(v),
        Err(Error::NoFiniteT { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        t,
        threshold: 1.0 / tm1.sqrt(),
        eps_t: epsilon_t(t)?,
        delta_t: delta_t(t, params)?,
        alpha_t: (4.0 / tm1.sqrt()).exp(),
        c: 4.0 * ((2.0 / tm1.sqrt()).exp() - 0.5),
        m: params.m,
        r: params.r,
        psi_ab: params.psi(),
        t_min,
    })
}
