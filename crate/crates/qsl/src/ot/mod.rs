//! Transport distances, divergences and two-point testing bounds.

mod modulus;
mod quad;
mod sliced;
mod transport;

pub use modulus::{ambiguity_modulus, ModulusBracket, ModulusFamily, ModulusMeasurement};
pub use quad::adaptive_simpson;
pub use sliced::{sliced_w1, PlanarLaw};
pub use transport::{transport_cost, w1_discrete, w2_discrete, w2_gaussian, PlanarAtom};

use crate::stats::{normal_cdf, normal_pdf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OtError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("grid density integrates to {0}, not 1")]
    Unnormalized(f64),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("too many atoms: {0} (limit {1})")]
    TooManyAtoms(usize, usize),
    #[error("quadrature did not converge on [{0}, {1}]")]
    NonConvergence(f64, f64),
    #[error("{0} has no density")]
    NoDensity(&'static str),
    #[error("covariance is not positive semidefinite")]
    NotPsd,
    #[error("empty feasible set: {0}")]
    EmptyFeasible(String),
}

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> OtError {
    OtError::Invalid { field: field.to_string(), reason: reason.into() }
}

/// Absolute tolerance and truncation width shared by all 1-D quadratures.
pub const QUAD_TOL: f64 = 1e-9;
pub const TRUNC_SDS: f64 = 10.0;
const CONTINUOUS_PANELS: usize = 64;

/// A law on the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution1D {
    /// Equally weighted samples, sorted ascending.
    Samples { values: Vec<f64> },
    /// Weighted atoms, sorted by position; weights sum to 1.
    Discrete { points: Vec<f64>, weights: Vec<f64> },
    /// Piecewise-constant density on cells [lo + i·dx, lo + (i+1)·dx).
    Grid { lo: f64, dx: f64, density: Vec<f64> },
    Gaussian { mean: f64, var: f64 },
    /// Σ w_i·N(m_i, v_i).
    Mixture { components: Vec<(f64, f64, f64)> },
}

impl Distribution1D {
    pub fn samples(mut values: Vec<f64>) -> Result<Self, OtError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("samples", "need at least one finite value"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self::Samples { values })
    }

    pub fn discrete(points: &[f64], weights: &[f64]) -> Result<Self, OtError> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(invalid("weights", "one weight per point, at least one point"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("weights", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(OtError::Unnormalized(total));
        }
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| points[a].total_cmp(&points[b]));
        Ok(Self::Discrete { points: idx.iter().map(|&i| points[i]).collect(), weights: idx.iter().map(|&i| weights[i]).collect() })
    }

    pub fn grid(lo: f64, dx: f64, density: Vec<f64>) -> Result<Self, OtError> {
        let d = Self::Grid { lo, dx, density };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self, OtError> {
        let d = Self::Gaussian { mean, var };
        d.validate()?;
        Ok(d)
    }

    /// ½N(m, v) + ½N(−m, v).
    pub fn symmetric_mixture(m: f64, var: f64) -> Result<Self, OtError> {
        Self::mixture(vec![(0.5, m, var), (0.5, -m, var)])
    }

    pub fn mixture(components: Vec<(f64, f64, f64)>) -> Result<Self, OtError> {
        let d = Self::Mixture { components };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), OtError> {
        match self {
            Self::Samples { values } => {
                if values.is_empty() || values.windows(2).any(|w| w[0] > w[1]) {
                    return Err(invalid("samples", "must be nonempty and sorted"));
                }
            }
            Self::Discrete { points, weights } => {
                if points.len() != weights.len() || points.is_empty() || points.windows(2).any(|w| w[0] > w[1]) {
                    return Err(invalid("discrete", "points must be nonempty, sorted, one weight each"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(OtError::Unnormalized(total));
                }
            }
            Self::Grid { lo, dx, density } => {
                if !(lo.is_finite() && *dx > 0.0 && dx.is_finite()) || density.is_empty() {
                    return Err(invalid("grid", "need finite lo, positive dx and at least one cell"));
                }
                if density.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(invalid("grid.density", "must be finite and nonnegative"));
                }
                let total = crate::stats::sum(density.iter().copied()) * dx;
                if (total - 1.0).abs() > 1e-9 {
                    return Err(OtError::Unnormalized(total));
                }
            }
            Self::Gaussian { mean, var } => {
                if !(mean.is_finite() && *var > 0.0 && var.is_finite()) {
                    return Err(invalid("gaussian", "need finite mean and var > 0"));
                }
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return Err(invalid("mixture", "no components"));
                }
                for &(w, m, v) in components {
                    if !(w >= 0.0 && m.is_finite() && v > 0.0 && v.is_finite()) {
                        return Err(invalid("mixture", "need w ≥ 0, finite means and var > 0"));
                    }
                }
                let total: f64 = components.iter().map(|c| c.0).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(OtError::Unnormalized(total));
                }
            }
        }
        Ok(())
    }

    fn is_atomic(&self) -> bool {
        matches!(self, Self::Samples { .. } | Self::Discrete { .. })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Samples { values } => values.partition_point(|v| *v <= x) as f64 / values.len() as f64,
            Self::Discrete { points, weights } => {
                let k = points.partition_point(|v| *v <= x);
                weights[..k].iter().sum::<f64>().min(1.0)
            }
            Self::Grid { lo, dx, density } => {
                let t = (x - lo) / dx;
                if t <= 0.0 {
                    return 0.0;
                }
                let k = (t.floor() as usize).min(density.len());
                let full: f64 = density[..k].iter().sum::<f64>() * dx;
                let part = if k < density.len() { density[k] * (t - k as f64) * dx } else { 0.0 };
                (full + part).min(1.0)
            }
            Self::Gaussian { mean, var } => normal_cdf((x - mean) / var.sqrt()),
            Self::Mixture { components } => components.iter().map(|&(w, m, v)| w * normal_cdf((x - m) / v.sqrt())).sum(),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64, OtError> {
        Ok(match self {
            Self::Samples { .. } => return Err(OtError::NoDensity("sample set")),
            Self::Discrete { .. } => return Err(OtError::NoDensity("discrete law")),
            Self::Grid { lo, dx, density } => {
                let t = (x - lo) / dx;
                if t < 0.0 || t >= density.len() as f64 {
                    0.0
                } else {
                    density[t as usize]
                }
            }
            Self::Gaussian { mean, var } => normal_pdf((x - mean) / var.sqrt()) / var.sqrt(),
            Self::Mixture { components } => {
                components.iter().map(|&(w, m, v)| w * normal_pdf((x - m) / v.sqrt()) / v.sqrt()).sum()
            }
        })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Samples { values } => crate::stats::sum(values.iter().copied()) / values.len() as f64,
            Self::Discrete { points, weights } => points.iter().zip(weights).map(|(p, w)| p * w).sum(),
            Self::Grid { lo, dx, density } => {
                density.iter().enumerate().map(|(i, d)| d * dx * (lo + (i as f64 + 0.5) * dx)).sum()
            }
            Self::Gaussian { mean, .. } => *mean,
            Self::Mixture { components } => components.iter().map(|c| c.0 * c.1).sum(),
        }
    }

    /// Interval outside which the mass is negligible.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Samples { values } => (values[0], values[values.len() - 1]),
            Self::Discrete { points, .. } => (points[0], points[points.len() - 1]),
            Self::Grid { lo, dx, density } => (*lo, lo + dx * density.len() as f64),
            Self::Gaussian { mean, var } => (mean - TRUNC_SDS * var.sqrt(), mean + TRUNC_SDS * var.sqrt()),
            Self::Mixture { components } => components.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, m, v)| {
                (lo.min(m - TRUNC_SDS * v.sqrt()), hi.max(m + TRUNC_SDS * v.sqrt()))
            }),
        }
    }

    /// Points where the CDF or density is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Samples { values } => values.clone(),
            Self::Discrete { points, .. } => points.clone(),
            Self::Grid { lo, dx, density } => (0..=density.len()).map(|i| lo + dx * i as f64).collect(),
            _ => Vec::new(),
        }
    }

    /// Add independent N(0, var) noise. Grid densities are not supported.
    pub fn convolve_gaussian(&self, var: f64) -> Result<Self, OtError> {
        if !(var > 0.0 && var.is_finite()) {
            return Err(invalid("var", "must be positive"));
        }
        match self {
            Self::Samples { values } => {
                let w = 1.0 / values.len() as f64;
                Self::mixture(values.iter().map(|&x| (w, x, var)).collect())
            }
            Self::Discrete { points, weights } => Self::mixture(points.iter().zip(weights).map(|(&x, &w)| (w, x, var)).collect()),
            Self::Gaussian { mean, var: v } => Self::gaussian(*mean, v + var),
            Self::Mixture { components } => Self::mixture(components.iter().map(|&(w, m, v)| (w, m, v + var)).collect()),
            Self::Grid { .. } => Err(invalid("grid", "convolution of grid densities is not supported")),
        }
    }
}

/// Panels covering the joint support, split at every breakpoint and into
/// [`CONTINUOUS_PANELS`] pieces for smooth parts.
fn panels(p: &Distribution1D, q: &Distribution1D) -> Vec<(f64, f64)> {
    let (a0, b0) = p.support();
    let (a1, b1) = q.support();
    let (lo, hi) = (a0.min(a1), b0.max(b1));
    if !(hi > lo) {
        return Vec::new();
    }
    let mut pts = p.breakpoints();
    pts.extend(q.breakpoints());
    if !(p.is_atomic() && q.is_atomic()) {
        pts.extend((0..=CONTINUOUS_PANELS).map(|i| lo + (hi - lo) * i as f64 / CONTINUOUS_PANELS as f64));
    }
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

/// CDF with atomic and grid laws frozen at their value on the open panel.
fn panel_cdf(d: &Distribution1D, x: f64, mid: f64) -> f64 {
    if d.is_atomic() {
        d.cdf(mid)
    } else {
        d.cdf(x)
    }
}

fn panel_pdf(d: &Distribution1D, x: f64, mid: f64) -> Result<f64, OtError> {
    match d {
        Distribution1D::Grid { .. } => d.pdf(mid),
        _ => d.pdf(x),
    }
}

fn integrate_panels(ps: &[(f64, f64)], mut f: impl FnMut(f64, f64) -> f64) -> Result<f64, OtError> {
    let total_width = ps.last().map_or(0.0, |l| l.1) - ps.first().map_or(0.0, |f| f.0);
    let mut acc = crate::stats::Accum::default();
    for &(a, b) in ps {
        let mid = 0.5 * (a + b);
        let tol = (QUAD_TOL * (b - a) / total_width).max(1e-15);
        acc.add(adaptive_simpson(|x| f(x, mid), a, b, tol)?);
    }
    Ok(acc.value())
}

/// W₁ on the line, ∫|F_p − F_q| dx.
pub fn w1_quantile_1d(p: &Distribution1D, q: &Distribution1D) -> Result<f64, OtError> {
    p.validate()?;
    q.validate()?;
    if let (Distribution1D::Samples { values: a }, Distribution1D::Samples { values: b }) = (p, q) {
        if a.len() == b.len() {
            return Ok(crate::stats::sum(a.iter().zip(b).map(|(x, y)| (x - y).abs())) / a.len() as f64);
        }
    }
    let ps = panels(p, q);
    if p.is_atomic() && q.is_atomic() {
        // piecewise constant: exact
        return Ok(crate::stats::sum(ps.iter().map(|&(a, b)| {
            let m = 0.5 * (a + b);
            (p.cdf(m) - q.cdf(m)).abs() * (b - a)
        })));
    }
    integrate_panels(&ps, |x, mid| (panel_cdf(p, x, mid) - panel_cdf(q, x, mid)).abs())
}

/// Total variation ½∫|p − q| for laws with densities.
pub fn tv_1d(p: &Distribution1D, q: &Distribution1D) -> Result<f64, OtError> {
    p.validate()?;
    q.validate()?;
    p.pdf(0.0)?;
    q.pdf(0.0)?;
    let ps = panels(p, q);
    let v = integrate_panels(&ps, |x, mid| {
        (panel_pdf(p, x, mid).unwrap_or(0.0) - panel_pdf(q, x, mid).unwrap_or(0.0)).abs()
    })?;
    Ok((0.5 * v).clamp(0.0, 1.0))
}

/// D_KL(p‖q) by quadrature, for laws with densities.
pub fn kl_1d(p: &Distribution1D, q: &Distribution1D) -> Result<f64, OtError> {
    p.validate()?;
    q.validate()?;
    p.pdf(0.0)?;
    q.pdf(0.0)?;
    let ps = panels(p, q);
    let v = integrate_panels(&ps, |x, mid| {
        let a = panel_pdf(p, x, mid).unwrap_or(0.0);
        let b = panel_pdf(q, x, mid).unwrap_or(0.0);
        if a <= 0.0 {
            0.0
        } else if b <= 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    })?;
    Ok(v.max(0.0))
}

/// TV between N(0, v0) and N(0, v1) in closed form.
pub fn tv_centered_gaussians(v0: f64, v1: f64) -> f64 {
    let (a, b) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
    if b - a <= 0.0 {
        return 0.0;
    }
    // densities cross at ±x*
    let x2 = a * b * (b / a).ln() / (b - a);
    let x = x2.sqrt();
    (2.0 * (normal_cdf(x / a.sqrt()) - normal_cdf(x / b.sqrt()))).clamp(0.0, 1.0)
}

/// D_KL(N(0,v0) ‖ N(0,v1)) = ½(v0/v1 − 1 − log(v0/v1)).
pub fn kl_gaussian_variance(v0: f64, v1: f64) -> Result<f64, OtError> {
    if !(v0 > 0.0 && v1 > 0.0 && v0.is_finite() && v1.is_finite()) {
        return Err(invalid("variance", "must be positive and finite"));
    }
    let t = v0 / v1;
    Ok(0.5 * (t - 1.0 - t.ln()))
}

/// ε²/ν, the data-processing bound on the KL between the sign-latent
/// mixtures ½N(±√2·b, ν) and ½N(±√2·(b+ε), ν). Independent of b.
pub fn kl_mixture_bound(_b: f64, eps: f64, nu: f64) -> f64 {
    eps * eps / nu
}

/// TV upper bound √(KL/2), clamped to 1.
pub fn pinsker(kl: f64) -> f64 {
    (kl.max(0.0) / 2.0).sqrt().min(1.0)
}

/// Le Cam two-point floor |τ0 − τ1|·(1 − TV)/4.
pub fn lecam_risk(tau0: f64, tau1: f64, tv: f64) -> f64 {
    (tau0 - tau1).abs() * (1.0 - tv.clamp(0.0, 1.0)) / 4.0
}

/// Best achievable max-error of any test between two laws, ½(1 − TV).
pub fn testing_error_floor(tv: f64) -> f64 {
    0.5 * (1.0 - tv.clamp(0.0, 1.0))
}

/// TV(⊗μ_j, ⊗ν_j) ≤ Σ_j TV(μ_j, ν_j), clamped to 1.
pub fn product_tv_bound(tvs: &[f64]) -> f64 {
    tvs.iter().sum::<f64>().min(1.0)
}

#[cfg(test)]
mod tests;
