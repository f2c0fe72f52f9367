//! Bell recovery maps and property estimators.
//!
//! Every estimator is a pure function of a [`MeasurementRecord`]: the same
//! record can be re-analysed for any number of properties after the fact.
//! Standard errors are plug-in (sample SD/√N).

mod hermite;

pub use hermite::{hermite_eval, MAX_DEGREE};

use crate::channels::{Channel, ChannelError, MeasurementRecord, SqueezeParam};
use crate::signals::{norm_sqr, pairing, u_vec, ComplexAmp};
use crate::stats::Accum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("dimension mismatch: record has {record} modes, argument has {arg}")]
    Dimension { record: usize, arg: usize },
    #[error("total degree {0} exceeds the cap of {MAX_DEGREE}")]
    DegreeCap(u32),
    #[error("phase unresolvable: |mean| = {mean:.3e} is below 3 noise standard errors ({se:.3e})")]
    PhaseUnresolvable { mean: f64, se: f64 },
}

fn invalid(field: &str, reason: impl Into<String>) -> EstimatorError {
    EstimatorError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Complex64,
    pub stderr: f64,
    pub n_shots: usize,
    pub method: String,
}

impl Estimate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value_re": self.value.re,
            "value_im": self.value.im,
            "stderr": self.stderr,
            "n_shots": self.n_shots,
            "method": self.method,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub coeff: Complex64,
    pub beta: Vec<ComplexAmp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub coeff: f64,
    /// Exponents over u = (Re ζ_1..n, Im ζ_1..n).
    pub kappa: Vec<u32>,
}

fn default_true() -> bool {
    true
}

/// A property ψ with a known Bell recovery map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum PropertyKernel {
    FourierAtom { beta0: Vec<ComplexAmp> },
    FourierMixture { terms: Vec<FourierTerm> },
    PolynomialSum { terms: Vec<PolyTerm> },
    CovXp {
        #[serde(default = "default_true")]
        mean_subtract: bool,
    },
    Phase { beta_ref: ComplexAmp },
    MatchedFilter { w: Vec<ComplexAmp>, t: f64 },
}

/// Run the estimator that matches `kernel`.
pub fn estimate(record: &MeasurementRecord, kernel: &PropertyKernel) -> Result<Estimate, EstimatorError> {
    match kernel {
        PropertyKernel::FourierAtom { beta0 } => estimate_char(record, beta0),
        PropertyKernel::FourierMixture { terms } => estimate_fourier_kernel(record, terms),
        PropertyKernel::PolynomialSum { terms } => estimate_polynomial(record, terms),
        PropertyKernel::CovXp { mean_subtract } => estimate_cov_xp(record, *mean_subtract),
        PropertyKernel::Phase { beta_ref } => estimate_phase(record, *beta_ref),
        PropertyKernel::MatchedFilter { w, t } => {
            Ok(matched_filter_scores(record, &[(w.clone(), *t)])?.remove(0))
        }
    }
}

fn bell_shots<'a>(record: &'a MeasurementRecord, op: &'static str) -> Result<(SqueezeParam, &'a [ComplexAmp]), EstimatorError> {
    let r = record.bell_squeezing(op)?;
    let data = record
        .complex()
        .ok_or(ChannelError::WrongChannel { op, expected: "bell", got: record.channel })?;
    Ok((r, data))
}

fn check_dim(record: &MeasurementRecord, arg: usize) -> Result<(), EstimatorError> {
    if record.n_modes() != arg {
        return Err(EstimatorError::Dimension { record: record.n_modes(), arg });
    }
    Ok(())
}

fn mean_c(xs: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (Accum::default(), Accum::default());
    for x in xs {
        re.add(x.re);
        im.add(x.im);
    }
    Complex64::new(re.value(), im.value()) / xs.len() as f64
}

/// SE of the mean of complex samples: √(Σ|x − x̄|² / ((N−1)·N)).
fn se_c(xs: &[Complex64], mean: Complex64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = Accum::default();
    for x in xs {
        acc.add((x - mean).norm_sqr());
    }
    (acc.value() / ((n - 1) as f64 * n as f64)).sqrt()
}

fn phases(data: &[ComplexAmp], modes: usize, beta: &[ComplexAmp]) -> Vec<Complex64> {
    data.chunks(modes).map(|z| Complex64::from_polar(1.0, pairing(z, beta))).collect()
}

/// Deblur factor exp(e^{−2r}|β|²).
pub fn deblur_factor(r: SqueezeParam, beta: &[ComplexAmp]) -> f64 {
    (r.bell_variance() * norm_sqr(beta)).exp()
}

/// Unbiased estimate of χ_P(β) from a Bell record.
pub fn estimate_char(record: &MeasurementRecord, beta: &[ComplexAmp]) -> Result<Estimate, EstimatorError> {
    let (r, data) = bell_shots(record, "estimate_char")?;
    check_dim(record, beta.len())?;
    let xs = phases(data, beta.len(), beta);
    let m = mean_c(&xs);
    let pref = deblur_factor(r, beta);
    Ok(Estimate { value: pref * m, stderr: pref * se_c(&xs, m), n_shots: xs.len(), method: "char".into() })
}

/// Σ_j coeff_j·χ̂(β_j) on the shared shots.
pub fn estimate_fourier_kernel(record: &MeasurementRecord, terms: &[FourierTerm]) -> Result<Estimate, EstimatorError> {
    if terms.is_empty() {
        return Err(invalid("terms", "empty Fourier mixture"));
    }
    let (r, data) = bell_shots(record, "estimate_fourier_kernel")?;
    let modes = record.n_modes();
    let n = record.len();
    let mut value = Complex64::new(0.0, 0.0);
    let mut per_shot = vec![Complex64::new(0.0, 0.0); n];
    for (j, term) in terms.iter().enumerate() {
        if term.beta.len() != modes {
            return Err(EstimatorError::Dimension { record: modes, arg: term.beta.len() });
        }
        if !(term.coeff.re.is_finite() && term.coeff.im.is_finite()) {
            return Err(invalid(&format!("terms[{j}].coeff"), "non-finite"));
        }
        let xs = phases(data, modes, &term.beta);
        let pref = deblur_factor(r, &term.beta);
        value += term.coeff * (pref * mean_c(&xs));
        for (p, x) in per_shot.iter_mut().zip(&xs) {
            *p += term.coeff * pref * x;
        }
    }
    let m = mean_c(&per_shot);
    Ok(Estimate { value, stderr: se_c(&per_shot, m), n_shots: n, method: "fourier".into() })
}

/// K_r(ψ) = Σ_j |coeff_j|·exp(e^{−2r}|β_j|²).
pub fn kr_norm(terms: &[FourierTerm], r: SqueezeParam) -> f64 {
    terms.iter().map(|t| t.coeff.norm() * deblur_factor(r, &t.beta)).sum()
}

/// Shots sufficient for accuracy `eps` with probability 1−`delta`:
/// ⌈8·K_r²·ε⁻²·log(4/δ)⌉.
pub fn kr_sample_bound(terms: &[FourierTerm], r: SqueezeParam, eps: f64, delta: f64) -> Result<u64, EstimatorError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", "must lie in (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    Ok(sample_bound_from_norm(kr_norm(terms, r), eps, delta))
}

pub fn sample_bound_from_norm(k: f64, eps: f64, delta: f64) -> u64 {
    (8.0 * k * k / (eps * eps) * (4.0 / delta).ln()).ceil() as u64
}

/// Unbiased estimate of E_P[Σ c_κ u(α)^κ] via products of scaled Hermite
/// polynomials at ν = ν_r.
pub fn estimate_polynomial(record: &MeasurementRecord, terms: &[PolyTerm]) -> Result<Estimate, EstimatorError> {
    let (r, data) = bell_shots(record, "estimate_polynomial")?;
    let modes = record.n_modes();
    for term in terms {
        if term.kappa.len() != 2 * modes {
            return Err(EstimatorError::Dimension { record: 2 * modes, arg: term.kappa.len() });
        }
        let deg: u32 = term.kappa.iter().sum();
        if deg > MAX_DEGREE {
            return Err(EstimatorError::DegreeCap(deg));
        }
    }
    let nu = r.nu();
    let vals: Vec<f64> = data
        .chunks(modes)
        .map(|z| {
            let u = u_vec(z);
            terms
                .iter()
                .map(|t| {
                    t.coeff
                        * t.kappa
                            .iter()
                            .zip(&u)
                            .map(|(&k, &x)| hermite::scaled(k, nu, x))
                            .product::<f64>()
                })
                .sum()
        })
        .collect();
    let (m, v) = crate::stats::mean_var(&vals);
    Ok(Estimate {
        value: Complex64::new(m, 0.0),
        stderr: (v / vals.len() as f64).sqrt(),
        n_shots: vals.len(),
        method: "polynomial".into(),
    })
}

/// Quadrature covariance E[Re ζ·Im ζ] (optionally mean-subtracted) from a
/// single-mode Bell or heterodyne record. Both channels add independent
/// noise to x and p, so no deblurring is needed.
pub fn estimate_cov_xp(record: &MeasurementRecord, mean_subtract: bool) -> Result<Estimate, EstimatorError> {
    let data = match (record.channel, record.complex()) {
        (Channel::Bell | Channel::Heterodyne, Some(d)) => d,
        _ => {
            return Err(ChannelError::WrongChannel { op: "estimate_cov_xp", expected: "bell or heterodyne", got: record.channel }.into())
        }
    };
    check_dim(record, 1)?;
    let n = data.len() as f64;
    let (mx, mp) = if mean_subtract {
        (crate::stats::sum(data.iter().map(|z| z.re)) / n, crate::stats::sum(data.iter().map(|z| z.im)) / n)
    } else {
        (0.0, 0.0)
    };
    let prods: Vec<f64> = data.iter().map(|z| z.re * z.im).collect();
    let raw = crate::stats::sum(prods.iter().copied()) / n;
    let centered: Vec<f64> = data.iter().map(|z| (z.re - mx) * (z.im - mp)).collect();
    let (_, v) = crate::stats::mean_var(&centered);
    Ok(Estimate {
        value: Complex64::new(raw - mx * mp, 0.0),
        stderr: (v / n).sqrt(),
        n_shots: data.len(),
        method: if mean_subtract { "cov_xp_centered" } else { "cov_xp" }.into(),
    })
}

/// Signed rotation angle of a beacon relative to `beta_ref`,
/// atan2 of e^{−i·arg β}·mean(ζ), in (−π, π].
pub fn estimate_phase(record: &MeasurementRecord, beta_ref: ComplexAmp) -> Result<Estimate, EstimatorError> {
    let data = match (record.channel, record.complex()) {
        (Channel::Bell | Channel::Heterodyne, Some(d)) => d,
        _ => {
            return Err(ChannelError::WrongChannel { op: "estimate_phase", expected: "bell or heterodyne", got: record.channel }.into())
        }
    };
    check_dim(record, 1)?;
    if beta_ref.norm() == 0.0 || !beta_ref.norm().is_finite() {
        return Err(invalid("beta_ref", "must be a nonzero finite amplitude"));
    }
    let n = data.len();
    let m = mean_c(data);
    // per-quadrature noise: empirical when possible, nominal for one shot
    let quad_var = if n >= 2 {
        let mut acc = Accum::default();
        for z in data {
            acc.add((z - m).norm_sqr());
        }
        acc.value() / (2.0 * (n - 1) as f64)
    } else if record.channel == Channel::Bell {
        record.bell_squeezing("estimate_phase")?.nu()
    } else {
        0.5
    };
    let se = (2.0 * quad_var / n as f64).sqrt();
    if m.norm() < 3.0 * se {
        return Err(EstimatorError::PhaseUnresolvable { mean: m.norm(), se });
    }
    let rotated = Complex64::from_polar(1.0, -beta_ref.arg()) * m;
    let mut theta = rotated.im.atan2(rotated.re);
    if theta <= -std::f64::consts::PI {
        theta = std::f64::consts::PI;
    }
    Ok(Estimate {
        value: Complex64::new(theta, 0.0),
        stderr: (quad_var / n as f64).sqrt() / m.norm(),
        n_shots: n,
        method: "phase".into(),
    })
}

/// β = i·t·w/2, where the template score φ_{Y_w}(t) equals χ_P(β).
pub fn template_beta(w: &[ComplexAmp], t: f64) -> Vec<ComplexAmp> {
    w.iter().map(|w| Complex64::i() * t * w / 2.0).collect()
}

/// Scores of every template (w, t) on one shared Bell record.
pub fn matched_filter_scores(record: &MeasurementRecord, templates: &[(Vec<ComplexAmp>, f64)]) -> Result<Vec<Estimate>, EstimatorError> {
    templates
        .iter()
        .map(|(w, t)| {
            let mut e = estimate_char(record, &template_beta(w, *t))?;
            e.method = "matched_filter".into();
            Ok(e)
        })
        .collect()
}

/// Median of the means of `k_groups` consecutive groups; the last group
/// takes the remainder.
pub fn median_of_means(values: &[f64], k_groups: usize) -> Result<f64, EstimatorError> {
    if values.is_empty() {
        return Err(invalid("values", "empty input"));
    }
    if k_groups == 0 || k_groups > values.len() {
        return Err(invalid("k_groups", format!("must lie in 1..={}", values.len())));
    }
    let size = values.len() / k_groups;
    let mut means: Vec<f64> = (0..k_groups)
        .map(|g| {
            let end = if g + 1 == k_groups { values.len() } else { (g + 1) * size };
            let grp = &values[g * size..end];
            crate::stats::sum(grp.iter().copied()) / grp.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    Ok(if means.len() % 2 == 1 { means[mid] } else { 0.5 * (means[mid - 1] + means[mid]) })
}
