use super::{invalid, w1_quantile_1d, Distribution1D, OtError, PlanarAtom};
use crate::signals::{Cov2, DisplacementLaw};

/// A law on ℝ² = (Re α, Im α) that can be projected onto lines.
#[derive(Clone, Debug, PartialEq)]
pub enum PlanarLaw {
    Atoms(Vec<PlanarAtom>),
    Samples(Vec<[f64; 2]>),
    /// (weight, mean, covariance); zero covariance components are atoms.
    GaussianMixture(Vec<(f64, [f64; 2], Cov2)>),
}

impl PlanarLaw {
    /// Single-mode laws with a Gaussian-mixture form.
    pub fn from_law(law: &DisplacementLaw) -> Result<Self, OtError> {
        let comps = law.components().ok_or_else(|| invalid("law", format!("{} has no planar mixture form", law.kind())))?;
        if comps.iter().all(|c| c.cov == Cov2::ZERO) {
            return Ok(Self::Atoms(comps.iter().map(|c| PlanarAtom::new(c.mean.re, c.mean.im, c.weight)).collect()));
        }
        Ok(Self::GaussianMixture(comps.iter().map(|c| (c.weight, [c.mean.re, c.mean.im], c.cov)).collect()))
    }

    /// Law of uᵀx with u = (cos θ, sin θ).
    pub fn project(&self, theta: f64) -> Result<Distribution1D, OtError> {
        let (s, c) = theta.sin_cos();
        let dot = |x: [f64; 2]| c * x[0] + s * x[1];
        match self {
            Self::Atoms(atoms) => {
                let pts: Vec<f64> = atoms.iter().map(|a| dot(a.point)).collect();
                let ws: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
                Distribution1D::discrete(&pts, &ws)
            }
            Self::Samples(xs) => Distribution1D::samples(xs.iter().map(|&x| dot(x)).collect()),
            Self::GaussianMixture(comps) => {
                if comps.iter().all(|(_, _, cov)| cov.quad([c, s]) > 0.0) {
                    Distribution1D::mixture(comps.iter().map(|(w, m, cov)| (*w, dot(*m), cov.quad([c, s]))).collect())
                } else if comps.iter().all(|(_, _, cov)| cov.quad([c, s]) == 0.0) {
                    let pts: Vec<f64> = comps.iter().map(|(_, m, _)| dot(*m)).collect();
                    let ws: Vec<f64> = comps.iter().map(|(w, _, _)| *w).collect();
                    Distribution1D::discrete(&pts, &ws)
                } else {
                    Err(invalid("law", "mixed degenerate and non-degenerate projections"))
                }
            }
        }
    }
}

/// (1/m)·Σ_j W₁ of the projections onto angles θ_j.
pub fn sliced_w1(p: &PlanarLaw, q: &PlanarLaw, angles: &[f64]) -> Result<f64, OtError> {
    if angles.is_empty() {
        return Err(invalid("angles", "need at least one angle"));
    }
    let mut total = 0.0;
    for &th in angles {
        total += w1_quantile_1d(&p.project(th)?, &q.project(th)?)?;
    }
    Ok(total / angles.len() as f64)
}
