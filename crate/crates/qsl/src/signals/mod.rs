//! Displacement laws over phase space and their analytic summaries.
//!
//! A law is a distribution of the complex displacement α ∈ ℂⁿ a classical
//! signal imprints on n bosonic modes. Characteristic functions use the
//! pairing ⟨α,β⟩ = Σ_k 2·Im(conj(α_k)·β_k), so that a Bell readout with
//! squeezing r multiplies χ by exactly exp(−e^{−2r}|β|²).

mod ghost;
mod mixture;
mod sampler;
mod waveform;

pub use ghost::{ghost_density, GridDensity};
pub use mixture::Component;
pub use sampler::{sample_law, Sampler};
pub use waveform::{coefficient_prior_for, waveform_map, waveform_to_law, WAVEFORM_SCALE};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ComplexAmp = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("no analytic form for {0}")]
    NoAnalyticForm(&'static str),
    #[error("rejection sampler stalled after {0} consecutive rejections")]
    Stall(u64),
    #[error("dimension mismatch: expected {expected} modes, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("grid error: {0}")]
    Grid(String),
}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> LawError {
    LawError::Invalid { field: field.into(), reason: reason.into() }
}

/// ⟨α,β⟩ = Σ 2·Im(conj(α_k)·β_k).
pub fn pairing(alpha: &[ComplexAmp], beta: &[ComplexAmp]) -> f64 {
    alpha.iter().zip(beta).map(|(a, b)| 2.0 * (a.re * b.im - a.im * b.re)).sum()
}

pub fn norm_sqr(v: &[ComplexAmp]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Symmetric 2×2 covariance of one mode's (x, p) quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cov2 {
    pub sigma_x2: f64,
    pub sigma_p2: f64,
    #[serde(default)]
    pub c: f64,
}

impl Cov2 {
    pub const ZERO: Cov2 = Cov2 { sigma_x2: 0.0, sigma_p2: 0.0, c: 0.0 };

    pub fn new(sigma_x2: f64, sigma_p2: f64, c: f64) -> Self {
        Self { sigma_x2, sigma_p2, c }
    }

    pub fn iso(v: f64) -> Self {
        Self::new(v, v, 0.0)
    }

    pub fn det(&self) -> f64 {
        self.sigma_x2 * self.sigma_p2 - self.c * self.c
    }

    pub fn trace(&self) -> f64 {
        self.sigma_x2 + self.sigma_p2
    }

    pub fn add(&self, o: &Cov2) -> Cov2 {
        Cov2::new(self.sigma_x2 + o.sigma_x2, self.sigma_p2 + o.sigma_p2, self.c + o.c)
    }

    /// uᵀΣu
    pub fn quad(&self, u: [f64; 2]) -> f64 {
        self.sigma_x2 * u[0] * u[0] + 2.0 * self.c * u[0] * u[1] + self.sigma_p2 * u[1] * u[1]
    }

    pub fn check_psd(&self, field: &str) -> Result<(), LawError> {
        let ok = [self.sigma_x2, self.sigma_p2, self.c].iter().all(|v| v.is_finite())
            && self.sigma_x2 >= 0.0
            && self.sigma_p2 >= 0.0
            // relative slack so boundary matrices like σ² = |c| pass
            && self.det() >= -1e-12 * (self.sigma_x2 * self.sigma_p2).max(f64::MIN_POSITIVE);
        if ok {
            Ok(())
        } else {
            Err(invalid(field, format!("covariance {self:?} is not positive semidefinite")))
        }
    }

    /// Lower-triangular factor L with L·Lᵀ = Σ; tolerates singular Σ.
    pub fn cholesky(&self) -> [[f64; 2]; 2] {
        if self.sigma_x2 > 0.0 {
            let l00 = self.sigma_x2.sqrt();
            let l10 = self.c / l00;
            let l11 = (self.sigma_p2 - l10 * l10).max(0.0).sqrt();
            [[l00, 0.0], [l10, l11]]
        } else {
            [[0.0, 0.0], [0.0, self.sigma_p2.max(0.0).sqrt()]]
        }
    }

    /// Principal square root (Σ^{1/2}, symmetric PSD).
    pub fn sqrt(&self) -> Cov2 {
        let s = self.det().max(0.0).sqrt();
        let t = (self.trace() + 2.0 * s).max(0.0).sqrt();
        if t == 0.0 {
            return Cov2::ZERO;
        }
        Cov2::new((self.sigma_x2 + s) / t, (self.sigma_p2 + s) / t, self.c / t)
    }

    /// A·B·A for symmetric A, B (symmetric result).
    pub fn sandwich(a: &Cov2, b: &Cov2) -> Cov2 {
        let m = [[a.sigma_x2, a.c], [a.c, a.sigma_p2]];
        let n = [[b.sigma_x2, b.c], [b.c, b.sigma_p2]];
        let mut mn = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                mn[i][j] = m[i][0] * n[0][j] + m[i][1] * n[1][j];
            }
        }
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = mn[i][0] * m[0][j] + mn[i][1] * m[1][j];
            }
        }
        Cov2::new(r[0][0], r[1][1], 0.5 * (r[0][1] + r[1][0]))
    }
}

/// Gaussian factor exp(−2·vᵀDv), v = (Im β, −Re β), by which adding
/// independent noise of covariance D multiplies χ(β) for one mode.
pub fn gaussian_factor(d: &Cov2, beta: ComplexAmp) -> f64 {
    (-2.0 * d.quad([beta.im, -beta.re])).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub point: Vec<ComplexAmp>,
    pub weight: f64,
}

impl Atom {
    pub fn new(point: Vec<ComplexAmp>, weight: f64) -> Self {
        Self { point, weight }
    }

    pub fn single(re: f64, im: f64, weight: f64) -> Self {
        Self::new(vec![ComplexAmp::new(re, im)], weight)
    }
}

/// Distribution of displacements. Serialized with a `law` tag, e.g.
/// `{"law": "gaussian_centered", "cov": {"sigma_x2": 1, "sigma_p2": 1, "c": 0}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DisplacementLaw {
    /// Single mode, mean zero, quadrature covariance Σ.
    GaussianCentered { cov: Cov2 },
    DeltaMixture { atoms: Vec<Atom> },
    /// Density ∝ e^{−2σ²|α|²}(1 + 4·eps0·sin(2·Im(γ†α))).
    ModulatedGaussian { sigma: f64, eps0: f64, gamma: Vec<ComplexAmp> },
    /// X = kick·Σ z_j with z_j = ±1, optionally conditioned on Π z_j = +1.
    /// Embedded on one mode as α = X/√2, so homodyne at θ=0 reads X + noise.
    ParityKicks { n: u32, kick: f64, constrained: bool },
    /// Coefficient prior over c_k = A_k + i·B_k pushed through
    /// α_k = (π/√2)(B_k − i·A_k).
    WaveformSinusoid { prior: Box<DisplacementLaw>, frequencies: Vec<f64> },
    /// Point mass at e^{iθ}β.
    RotatedBeacon { beta: ComplexAmp, theta: f64 },
    /// Image of `base` under α ↦ factor·α.
    Scaled { base: Box<DisplacementLaw>, factor: ComplexAmp },
    /// `base` convolved mode-wise with centered Gaussian noise of covariance `extra`.
    Blurred { base: Box<DisplacementLaw>, extra: Cov2 },
}

impl DisplacementLaw {
    pub fn point(alpha: ComplexAmp) -> Self {
        Self::DeltaMixture { atoms: vec![Atom::new(vec![alpha], 1.0)] }
    }

    pub fn point_multi(alpha: Vec<ComplexAmp>) -> Self {
        Self::DeltaMixture { atoms: vec![Atom::new(alpha, 1.0)] }
    }

    pub fn gaussian(sigma_x2: f64, sigma_p2: f64, c: f64) -> Self {
        Self::GaussianCentered { cov: Cov2::new(sigma_x2, sigma_p2, c) }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::GaussianCentered { .. } => "gaussian_centered",
            Self::DeltaMixture { .. } => "delta_mixture",
            Self::ModulatedGaussian { .. } => "modulated_gaussian",
            Self::ParityKicks { .. } => "parity_kicks",
            Self::WaveformSinusoid { .. } => "waveform_sinusoid",
            Self::RotatedBeacon { .. } => "rotated_beacon",
            Self::Scaled { .. } => "scaled",
            Self::Blurred { .. } => "blurred",
        }
    }

    /// Compact text form stored alongside measurement records.
    pub fn descriptor(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| self.kind().to_string())
    }

    pub fn n_modes(&self) -> usize {
        match self {
            Self::GaussianCentered { .. } | Self::ParityKicks { .. } | Self::RotatedBeacon { .. } => 1,
            Self::DeltaMixture { atoms } => atoms.first().map_or(0, |a| a.point.len()),
            Self::ModulatedGaussian { gamma, .. } => gamma.len(),
            Self::WaveformSinusoid { prior, .. } => prior.n_modes(),
            Self::Scaled { base, .. } | Self::Blurred { base, .. } => base.n_modes(),
        }
    }

    pub fn validate(&self) -> Result<(), LawError> {
        self.validate_at("law")
    }

    fn validate_at(&self, path: &str) -> Result<(), LawError> {
        let finite = |z: &ComplexAmp| z.re.is_finite() && z.im.is_finite();
        match self {
            Self::GaussianCentered { cov } => cov.check_psd(&format!("{path}.cov")),
            Self::DeltaMixture { atoms } => {
                if atoms.is_empty() {
                    return Err(invalid(format!("{path}.atoms"), "at least one atom required"));
                }
                let dim = atoms[0].point.len();
                if dim == 0 {
                    return Err(invalid(format!("{path}.atoms[0].point"), "empty point"));
                }
                let mut total = 0.0;
                for (i, a) in atoms.iter().enumerate() {
                    if a.point.len() != dim {
                        return Err(invalid(format!("{path}.atoms[{i}].point"), "mode count differs between atoms"));
                    }
                    if !a.point.iter().all(finite) {
                        return Err(invalid(format!("{path}.atoms[{i}].point"), "non-finite amplitude"));
                    }
                    if !(a.weight >= 0.0 && a.weight.is_finite()) {
                        return Err(invalid(format!("{path}.atoms[{i}].weight"), "weights must be finite and nonnegative"));
                    }
                    total += a.weight;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(invalid(format!("{path}.atoms"), format!("weights sum to {total}, not 1")));
                }
                Ok(())
            }
            Self::ModulatedGaussian { sigma, eps0, gamma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(invalid(format!("{path}.sigma"), "must be positive"));
                }
                if !(0.0..=0.25).contains(eps0) {
                    return Err(invalid(format!("{path}.eps0"), "must lie in [0, 1/4]"));
                }
                if gamma.is_empty() || !gamma.iter().all(finite) {
                    return Err(invalid(format!("{path}.gamma"), "need at least one finite mode"));
                }
                Ok(())
            }
            Self::ParityKicks { n, kick, .. } => {
                if *n < 1 {
                    return Err(invalid(format!("{path}.n"), "must be at least 1"));
                }
                if !(*kick > 0.0 && kick.is_finite()) {
                    return Err(invalid(format!("{path}.kick"), "must be positive"));
                }
                Ok(())
            }
            Self::WaveformSinusoid { prior, frequencies } => {
                prior.validate_at(&format!("{path}.prior"))?;
                if prior.n_modes() != frequencies.len() {
                    return Err(LawError::Dimension { expected: frequencies.len(), got: prior.n_modes() });
                }
                Ok(())
            }
            Self::RotatedBeacon { beta, theta } => {
                if !finite(beta) || !theta.is_finite() {
                    return Err(invalid(format!("{path}.beta"), "non-finite parameters"));
                }
                Ok(())
            }
            Self::Scaled { base, factor } => {
                if !finite(factor) {
                    return Err(invalid(format!("{path}.factor"), "non-finite"));
                }
                base.validate_at(&format!("{path}.base"))
            }
            Self::Blurred { base, extra } => {
                extra.check_psd(&format!("{path}.extra"))?;
                base.validate_at(&format!("{path}.base"))
            }
        }
    }

    /// χ(β) = E[exp(i⟨α,β⟩)].
    pub fn char_func(&self, beta: &[ComplexAmp]) -> Result<Complex64, LawError> {
        let n = self.n_modes();
        if beta.len() != n {
            return Err(LawError::Dimension { expected: n, got: beta.len() });
        }
        let i = Complex64::i();
        Ok(match self {
            Self::GaussianCentered { cov } => Complex64::from(gaussian_factor(cov, beta[0])),
            Self::DeltaMixture { atoms } => {
                atoms.iter().map(|a| a.weight * (i * pairing(&a.point, beta)).exp()).sum()
            }
            Self::ModulatedGaussian { sigma, eps0, gamma } => {
                let g = |shift: f64| {
                    let d: f64 = beta.iter().zip(gamma).map(|(b, c)| (b + shift * c).norm_sqr()).sum();
                    (-d / (2.0 * sigma * sigma)).exp()
                };
                g(0.0) - 2.0 * i * eps0 * g(-1.0) + 2.0 * i * eps0 * g(1.0)
            }
            Self::ParityKicks { n, kick, constrained } => {
                parity_scalar_char(*n, *kick, *constrained, std::f64::consts::SQRT_2 * beta[0].im)
            }
            Self::WaveformSinusoid { prior, .. } => {
                let b: Vec<_> = beta.iter().map(|b| WAVEFORM_SCALE.conj() * b).collect();
                prior.char_func(&b)?
            }
            Self::RotatedBeacon { beta: b0, theta } => {
                let a = Complex64::from_polar(1.0, *theta) * b0;
                (i * pairing(&[a], beta)).exp()
            }
            Self::Scaled { base, factor } => {
                let b: Vec<_> = beta.iter().map(|b| factor.conj() * b).collect();
                base.char_func(&b)?
            }
            Self::Blurred { base, extra } => {
                base.char_func(beta)? * beta.iter().map(|b| gaussian_factor(extra, *b)).product::<f64>()
            }
        })
    }

    pub fn moments(&self) -> Result<Moments, LawError> {
        self.validate()?;
        Ok(match self {
            Self::GaussianCentered { cov } => Moments::from_single(ComplexAmp::new(0.0, 0.0), cov),
            Self::DeltaMixture { atoms } => {
                let n = atoms[0].point.len();
                let mut m = Moments::zero(n);
                for a in atoms {
                    for k in 0..n {
                        m.mean[k] += a.weight * a.point[k];
                    }
                }
                let u_mean = m.u_mean();
                for a in atoms {
                    let u = u_vec(&a.point);
                    for r in 0..2 * n {
                        for c in 0..2 * n {
                            m.cov[r * 2 * n + c] += a.weight * (u[r] - u_mean[r]) * (u[c] - u_mean[c]);
                        }
                    }
                }
                m
            }
            Self::ModulatedGaussian { sigma, eps0, gamma } => {
                // Envelope N(0, s²I) per real coordinate. 2·Im(γ†α) = g·u with
                // g = (−2γ_p, 2γ_x); Stein's lemma gives E[u·sin(g·u)] = s²g·e^{−s²|g|²/2}.
                let n = gamma.len();
                let s2 = 1.0 / (4.0 * sigma * sigma);
                let g: Vec<f64> = gamma.iter().map(|z| -2.0 * z.im).chain(gamma.iter().map(|z| 2.0 * z.re)).collect();
                let g2: f64 = g.iter().map(|v| v * v).sum();
                let damp = 4.0 * eps0 * s2 * (-s2 * g2 / 2.0).exp();
                let u_mean: Vec<f64> = g.iter().map(|v| damp * v).collect();
                let mut m = Moments::zero(n);
                for k in 0..n {
                    m.mean[k] = ComplexAmp::new(u_mean[k], u_mean[n + k]);
                }
                for r in 0..2 * n {
                    for c in 0..2 * n {
                        let diag = if r == c { s2 } else { 0.0 };
                        m.cov[r * 2 * n + c] = diag - u_mean[r] * u_mean[c];
                    }
                }
                m
            }
            Self::ParityKicks { n, kick, constrained } => {
                let nf = *n as f64;
                let rho1 = if *constrained && *n == 1 { 1.0 } else { 0.0 };
                let rho2 = if *constrained && *n == 2 { 1.0 } else { 0.0 };
                let mean_x = kick * nf * rho1;
                let var_x = kick * kick * (nf + nf * (nf - 1.0) * rho2) - mean_x * mean_x;
                let cov = Cov2::new(var_x / 2.0, 0.0, 0.0);
                Moments::from_single(ComplexAmp::new(mean_x / std::f64::consts::SQRT_2, 0.0), &cov)
            }
            Self::WaveformSinusoid { prior, .. } => prior.moments()?.scaled(WAVEFORM_SCALE),
            Self::RotatedBeacon { beta, theta } => {
                Moments::from_single(Complex64::from_polar(1.0, *theta) * beta, &Cov2::ZERO)
            }
            Self::Scaled { base, factor } => base.moments()?.scaled(*factor),
            Self::Blurred { base, extra } => {
                let mut m = base.moments()?;
                let n = m.mean.len();
                for k in 0..n {
                    m.cov[k * 2 * n + k] += extra.sigma_x2;
                    m.cov[(n + k) * 2 * n + n + k] += extra.sigma_p2;
                    m.cov[k * 2 * n + n + k] += extra.c;
                    m.cov[(n + k) * 2 * n + k] += extra.c;
                }
                m
            }
        })
    }

    /// Finite Gaussian-mixture form of a single-mode law, when it has one.
    pub fn components(&self) -> Option<Vec<Component>> {
        mixture::components(self)
    }
}

/// E[exp(i·k·X)] for the parity-kick sum X.
pub fn parity_scalar_char(n: u32, kick: f64, constrained: bool, k: f64) -> Complex64 {
    let (s, c) = (k * kick).sin_cos();
    let mut v = Complex64::from(c.powi(n as i32));
    if constrained {
        v += Complex64::i().powu(n) * s.powi(n as i32);
    }
    v
}

/// u(α) = (Re α_1..n, Im α_1..n).
pub fn u_vec(alpha: &[ComplexAmp]) -> Vec<f64> {
    alpha.iter().map(|z| z.re).chain(alpha.iter().map(|z| z.im)).collect()
}

/// First and second moments in u-coordinates (Re α_1..n, Im α_1..n).
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: Vec<ComplexAmp>,
    /// Row-major 2n×2n covariance.
    pub cov: Vec<f64>,
}

impl Moments {
    fn zero(n: usize) -> Self {
        Self { mean: vec![ComplexAmp::new(0.0, 0.0); n], cov: vec![0.0; 4 * n * n] }
    }

    fn from_single(mean: ComplexAmp, cov: &Cov2) -> Self {
        Self { mean: vec![mean], cov: vec![cov.sigma_x2, cov.c, cov.c, cov.sigma_p2] }
    }

    pub fn dim(&self) -> usize {
        2 * self.mean.len()
    }

    pub fn u_mean(&self) -> Vec<f64> {
        u_vec(&self.mean)
    }

    pub fn cov_at(&self, r: usize, c: usize) -> f64 {
        self.cov[r * self.dim() + c]
    }

    /// Moments of f·α.
    fn scaled(&self, f: ComplexAmp) -> Self {
        let n = self.mean.len();
        let d = 2 * n;
        // (x, p) ↦ (a·x − b·p, b·x + a·p)
        let mut a = vec![0.0; d * d];
        for k in 0..n {
            a[k * d + k] = f.re;
            a[k * d + n + k] = -f.im;
            a[(n + k) * d + k] = f.im;
            a[(n + k) * d + n + k] = f.re;
        }
        let mut ac = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                ac[r * d + c] = (0..d).map(|j| a[r * d + j] * self.cov[j * d + c]).sum();
            }
        }
        let mut cov = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                cov[r * d + c] = (0..d).map(|j| ac[r * d + j] * a[c * d + j]).sum();
            }
        }
        Self { mean: self.mean.iter().map(|m| f * m).collect(), cov }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn c(re: f64, im: f64) -> ComplexAmp {
        ComplexAmp::new(re, im)
    }

    #[test]
    fn pairing_is_antisymmetric() {
        let a = [c(0.3, -1.2), c(2.0, 0.5)];
        let b = [c(-0.7, 0.4), c(0.1, 1.1)];
        assert!((pairing(&a, &b) + pairing(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn char_at_zero_is_one() {
        let laws = vec![
            DisplacementLaw::gaussian(1.0, 0.5, 0.2),
            DisplacementLaw::point(c(1.0, 2.0)),
            DisplacementLaw::ModulatedGaussian { sigma: 0.7, eps0: 0.25, gamma: vec![c(1.0, 0.0)] },
            DisplacementLaw::ParityKicks { n: 5, kick: 0.3, constrained: true },
            DisplacementLaw::RotatedBeacon { beta: c(2.0, 0.0), theta: 0.3 },
        ];
        for law in laws {
            let v = law.char_func(&[c(0.0, 0.0)]).unwrap();
            assert!((v - 1.0).norm() < 1e-15, "{law:?}");
        }
    }

    #[test]
    fn parity_char_at_k_star() {
        for n in [1u32, 2, 3, 4, 7, 16] {
            let kick = 1.0 / (n as f64).sqrt();
            let k_star = PI / (2.0 * kick);
            let beta = [c(0.0, k_star / SQRT_2)];
            let law = DisplacementLaw::ParityKicks { n, kick, constrained: true };
            let v = law.char_func(&beta).unwrap();
            let want = Complex64::i().powu(n);
            assert!((v - want).norm() < 1e-12, "n={n}: {v}");
            let free = DisplacementLaw::ParityKicks { n, kick, constrained: false };
            assert!(free.char_func(&beta).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn modulated_char_large_gamma() {
        let gamma = c(6.0, 2.0);
        let law = DisplacementLaw::ModulatedGaussian { sigma: 1.0, eps0: 0.2, gamma: vec![gamma] };
        let v = law.char_func(&[gamma]).unwrap();
        assert!((v - c(0.0, -0.4)).norm() < 1e-8, "{v}");
    }

    #[test]
    fn xor_moments() {
        let a = 0.35;
        let law = DisplacementLaw::DeltaMixture {
            atoms: vec![Atom::single(a, a, 0.5), Atom::single(-a, -a, 0.5)],
        };
        let m = law.moments().unwrap();
        assert!(m.mean[0].norm() < 1e-15);
        for v in &m.cov {
            assert!((v - a * a).abs() < 1e-15);
        }
    }

    #[test]
    fn beacon_moments() {
        let law = DisplacementLaw::RotatedBeacon { beta: c(2.0, 0.0), theta: FRAC_PI_2 };
        let m = law.moments().unwrap();
        assert!((m.mean[0] - c(0.0, 2.0)).norm() < 1e-15);
        assert!(m.cov.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn parity_moments_small_n() {
        // n=1 constrained is a point mass at X = kick
        let m = DisplacementLaw::ParityKicks { n: 1, kick: 0.5, constrained: true }.moments().unwrap();
        assert!((m.mean[0].re * SQRT_2 - 0.5).abs() < 1e-15);
        assert!(m.cov[0].abs() < 1e-15);
        // n=2 constrained: X ∈ {±2B} equally
        let m = DisplacementLaw::ParityKicks { n: 2, kick: 0.5, constrained: true }.moments().unwrap();
        assert!((2.0 * m.cov[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation_names_fields() {
        let bad = DisplacementLaw::gaussian(1.0, 1.0, 2.0);
        match bad.validate() {
            Err(LawError::Invalid { field, .. }) => assert_eq!(field, "law.cov"),
            other => panic!("{other:?}"),
        }
        let bad = DisplacementLaw::DeltaMixture { atoms: vec![Atom::single(0.0, 0.0, 0.7)] };
        assert!(bad.validate().is_err());
        let bad = DisplacementLaw::ModulatedGaussian { sigma: 1.0, eps0: 0.3, gamma: vec![c(1.0, 0.0)] };
        match bad.validate() {
            Err(LawError::Invalid { field, .. }) => assert_eq!(field, "law.eps0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn serde_round_trip() {
        let law = DisplacementLaw::Blurred {
            base: Box::new(DisplacementLaw::DeltaMixture {
                atoms: vec![Atom::single(0.35, 0.06, 0.5), Atom::single(-0.35, -0.06, 0.5)],
            }),
            extra: Cov2::iso(0.01),
        };
        let js = serde_json::to_string(&law).unwrap();
        assert_eq!(serde_json::from_str::<DisplacementLaw>(&js).unwrap(), law);
        let t = toml::to_string(&law).unwrap();
        assert_eq!(toml::from_str::<DisplacementLaw>(&t).unwrap(), law);
    }

    #[test]
    fn toml_config_block() {
        let src = r#"
law = "gaussian_centered"
cov = { sigma_x2 = 0.02, sigma_p2 = 0.02, c = 0.01 }
"#;
        let law: DisplacementLaw = toml::from_str(src).unwrap();
        assert_eq!(law, DisplacementLaw::gaussian(0.02, 0.02, 0.01));
    }

    #[test]
    fn sqrt_squares_back() {
        let s = Cov2::new(1.3, 0.7, 0.4);
        let r = s.sqrt();
        let back = Cov2::sandwich(&r, &Cov2::iso(1.0));
        assert!((back.sigma_x2 - 1.3).abs() < 1e-14);
        assert!((back.sigma_p2 - 0.7).abs() < 1e-14);
        assert!((back.c - 0.4).abs() < 1e-14);
    }
}
