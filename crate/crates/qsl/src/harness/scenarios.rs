use super::{
    empirical_sample_complexity, invalid, run_binary_test, sample_record, ChannelPlan, DecisionRule, HarnessError, NStar,
    SearchOptions, TestSpec,
};
use crate::channels::{beacon_variance, compose_noise, SqueezeParam};
use crate::estimators::estimate_phase;
use crate::rng::derive;
use crate::signals::{Atom, ComplexAmp, Cov2, DisplacementLaw};
use crate::stats::Rate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::time::Instant;

/// One point of an N_star curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    /// None when the bracket was exhausted.
    pub n_star: Option<u64>,
    /// Wilson interval of the max error at `n_star` (or at N_hi when exhausted).
    pub err_lo: f64,
    pub err_hi: f64,
    pub resolved: bool,
}

impl SweepPoint {
    fn from_search(axis_value: f64, res: Result<NStar, HarnessError>) -> Result<Self, HarnessError> {
        match res {
            Ok(s) => Ok(Self { axis_value, n_star: Some(s.n_star), err_lo: s.rate.lo, err_hi: s.rate.hi, resolved: s.resolved }),
            Err(HarnessError::BracketExhausted { rate, .. }) => Ok(Self {
                axis_value,
                n_star: None,
                err_lo: rate.map_or(0.0, |r| r.lo),
                err_hi: rate.map_or(1.0, |r| r.hi),
                resolved: true,
            }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub channel: String,
    pub axis_name: String,
    pub points: Vec<SweepPoint>,
    pub trials: u64,
    pub seed: u64,
    /// Wall-clock seconds; not written to result files.
    #[serde(skip)]
    pub runtime: f64,
}

impl SweepResult {
    /// Least-squares slope of log N_star against log axis over resolved points.
    pub fn loglog_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> =
            self.points.iter().filter_map(|p| p.n_star.map(|n| (p.axis_value.ln(), (n as f64).ln()))).collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// max/min of N_star; None if any point is exhausted.
    pub fn spread(&self) -> Option<f64> {
        let ns: Option<Vec<u64>> = self.points.iter().map(|p| p.n_star).collect();
        let ns = ns?;
        let (lo, hi) = (ns.iter().min()?, ns.iter().max()?);
        Some(*hi as f64 / *lo as f64)
    }
}

fn sweep(
    scenario: &str,
    channel: &str,
    axis_name: &str,
    axis: &[f64],
    opts: &SearchOptions,
    seed: u64,
    stream: u64,
    spec_at: impl Fn(f64) -> Result<TestSpec, HarnessError>,
) -> Result<SweepResult, HarnessError> {
    let start = Instant::now();
    let mut points = Vec::with_capacity(axis.len());
    for (i, &x) in axis.iter().enumerate() {
        let spec = spec_at(x)?;
        let s = derive(seed, &[stream, i as u64]);
        points.push(SweepPoint::from_search(x, empirical_sample_complexity(&spec, opts, s))?);
    }
    Ok(SweepResult {
        scenario: scenario.into(),
        channel: channel.into(),
        axis_name: axis_name.into(),
        points,
        trials: opts.trials,
        seed,
        runtime: start.elapsed().as_secs_f64(),
    })
}

fn channel_stream(plan: &ChannelPlan) -> u64 {
    match plan {
        ChannelPlan::Bell { .. } => 0,
        ChannelPlan::Homodyne { .. } => 1,
        ChannelPlan::Heterodyne => 2,
    }
}

fn check_grid(field: &str, grid: &[f64]) -> Result<(), HarnessError> {
    if grid.is_empty() {
        return Err(invalid(field, "grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid(field, "grid values must be finite"));
    }
    Ok(())
}

/// P_diag = ½δ(a, b) + ½δ(−a, −b) against Q_ε = ½δ(a, −b−ε) + ½δ(−a, b+ε),
/// in (Re α, Im α) coordinates. ε = 0 gives the XOR pair.
pub fn delta_pair(a: f64, b: f64, eps: f64) -> (DisplacementLaw, DisplacementLaw) {
    let p = DisplacementLaw::DeltaMixture { atoms: vec![Atom::single(a, b, 0.5), Atom::single(-a, -b, 0.5)] };
    let q = DisplacementLaw::DeltaMixture {
        atoms: vec![Atom::single(a, -b - eps, 0.5), Atom::single(-a, b + eps, 0.5)],
    };
    (p, q)
}

/// Σ₊ = [[σ², c], [c, σ²]] against Σ₋,ε = [[σ²+ε, −c], [−c, σ²]].
pub fn gaussian_pair(sigma2: f64, c: f64, eps: f64) -> (DisplacementLaw, DisplacementLaw) {
    (DisplacementLaw::gaussian(sigma2, sigma2, c), DisplacementLaw::gaussian(sigma2 + eps, sigma2, -c))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmFieldParams {
    /// Mean marginal variance σ²; the deformed hypothesis uses σ² ± Δ/2.
    pub sigma2: f64,
    /// Δ as a fraction of c.
    pub delta_over_c: f64,
    pub c_grid: Vec<f64>,
    pub r: f64,
    /// Isotropic white-noise variance as a fraction of c.
    pub white_noise: f64,
    pub search: SearchOptions,
}

impl Default for EmFieldParams {
    fn default() -> Self {
        Self {
            sigma2: 0.03,
            delta_over_c: 0.1,
            c_grid: vec![0.005, 0.01, 0.02],
            r: 2.0,
            white_noise: 0.2,
            search: SearchOptions { n_hi: 1 << 17, ..SearchOptions::default() },
        }
    }
}

/// Σ(σ², σ², +c) against Σ(σ²+Δ/2, σ²−Δ/2, −c), both blurred by white
/// noise. Returns the Bell, homodyne and heterodyne curves over c.
pub fn scenario_em_field(p: &EmFieldParams, seed: u64) -> Result<Vec<SweepResult>, HarnessError> {
    check_grid("c_grid", &p.c_grid)?;
    if !(p.delta_over_c >= 0.0 && p.delta_over_c <= 1.0) {
        return Err(invalid("delta_over_c", "need 0 ≤ Δ ≤ c"));
    }
    if !(p.white_noise >= 0.0) {
        return Err(invalid("white_noise", "must be nonnegative"));
    }
    let pair = |c: f64| -> Result<(DisplacementLaw, DisplacementLaw), HarnessError> {
        let d = p.delta_over_c * c.abs();
        let noise = Cov2::iso(p.white_noise * c.abs());
        let h0 = compose_noise(&DisplacementLaw::gaussian(p.sigma2, p.sigma2, c), noise)?;
        let h1 = compose_noise(&DisplacementLaw::gaussian(p.sigma2 + d / 2.0, p.sigma2 - d / 2.0, -c), noise)?;
        Ok((h0, h1))
    };
    let plans = [
        (ChannelPlan::Bell { r: p.r }, DecisionRule::CovSignThreshold),
        (ChannelPlan::Homodyne { angles: vec![0.0, FRAC_PI_2], r: p.r }, DecisionRule::VarianceThreshold),
        (ChannelPlan::Heterodyne, DecisionRule::CovSignThreshold),
    ];
    plans
        .into_iter()
        .map(|(plan, rule)| {
            sweep("em_field", plan.name(), "c", &p.c_grid, &p.search, seed, channel_stream(&plan), |c| {
                let (h0, h1) = pair(c)?;
                Ok(TestSpec::new(h0, h1, plan.clone(), rule.clone()))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaWedgeParams {
    pub a: f64,
    pub b: f64,
    pub eps_grid: Vec<f64>,
    pub r: f64,
    /// Accept ε > b/2, where the wedge analysis no longer applies.
    pub allow_outside_wedge: bool,
    pub search: SearchOptions,
}

impl Default for DeltaWedgeParams {
    fn default() -> Self {
        Self { a: 0.06, b: 0.06, eps_grid: vec![0.01, 0.02, 0.03], r: 1.2, allow_outside_wedge: false, search: SearchOptions::default() }
    }
}

/// Bell quadrant test and best-fixed-angle homodyne on the ε-deformed delta pair.
pub fn scenario_delta_wedge(p: &DeltaWedgeParams, seed: u64) -> Result<Vec<SweepResult>, HarnessError> {
    check_grid("eps_grid", &p.eps_grid)?;
    if !(p.b > 0.0) {
        return Err(invalid("b", "must be positive"));
    }
    if let Some(e) = p.eps_grid.iter().find(|e| **e <= 0.0) {
        return Err(invalid("eps_grid", format!("ε must be positive, got {e}")));
    }
    if !p.allow_outside_wedge {
        if let Some(e) = p.eps_grid.iter().find(|e| **e > p.b / 2.0) {
            return Err(invalid("eps_grid", format!("ε = {e} exceeds b/2 = {}", p.b / 2.0)));
        }
    }
    let plans = [
        (ChannelPlan::Bell { r: p.r }, DecisionRule::QuadrantSign),
        (ChannelPlan::Homodyne { angles: vec![0.0, FRAC_PI_2], r: p.r }, DecisionRule::SignCorrectedMeanThreshold),
    ];
    plans
        .into_iter()
        .map(|(plan, rule)| {
            sweep("delta_wedge", plan.name(), "eps", &p.eps_grid, &p.search, seed, channel_stream(&plan), |e| {
                let (h0, h1) = delta_pair(p.a, p.b, e);
                Ok(TestSpec::new(h0, h1, plan.clone(), rule.clone()))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianPairParams {
    pub sigma2: f64,
    pub c: f64,
    pub eps_grid: Vec<f64>,
    pub r: f64,
    pub search: SearchOptions,
}

impl Default for GaussianPairParams {
    fn default() -> Self {
        Self { sigma2: 0.05, c: 0.05, eps_grid: vec![0.01, 0.02, 0.04], r: 1.0, search: SearchOptions::default() }
    }
}

/// Bell covariance sign against the homodyne variance threshold on Σ₊ vs Σ₋,ε.
pub fn scenario_gaussian_pair(p: &GaussianPairParams, seed: u64) -> Result<Vec<SweepResult>, HarnessError> {
    check_grid("eps_grid", &p.eps_grid)?;
    if let Some(e) = p.eps_grid.iter().find(|e| **e < 0.0) {
        return Err(invalid("eps_grid", format!("ε must be nonnegative, got {e}")));
    }
    let plans = [
        (ChannelPlan::Bell { r: p.r }, DecisionRule::CovSignThreshold),
        (ChannelPlan::Homodyne { angles: vec![0.0, FRAC_PI_2], r: p.r }, DecisionRule::VarianceThreshold),
    ];
    plans
        .into_iter()
        .map(|(plan, rule)| {
            sweep("gaussian_pair", plan.name(), "eps", &p.eps_grid, &p.search, seed, channel_stream(&plan), |e| {
                let (h0, h1) = gaussian_pair(p.sigma2, p.c, e);
                Ok(TestSpec::new(h0, h1, plan.clone(), rule.clone()))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezingScalingParams {
    pub sigma2: f64,
    pub c: f64,
    pub r_grid: Vec<f64>,
    pub search: SearchOptions,
}

impl Default for SqueezingScalingParams {
    fn default() -> Self {
        Self { sigma2: 0.0005, c: 0.0005, r_grid: vec![1.0, 2.0], search: SearchOptions::default() }
    }
}

/// Bell covariance-sign N_star for Σ(+c) vs Σ(−c) across squeezing.
pub fn scenario_squeezing_scaling(p: &SqueezingScalingParams, seed: u64) -> Result<Vec<SweepResult>, HarnessError> {
    check_grid("r_grid", &p.r_grid)?;
    let (h0, h1) = gaussian_pair(p.sigma2, p.c, 0.0);
    let res = sweep("squeezing_scaling", "bell", "r", &p.r_grid, &p.search, seed, 0, |r| {
        Ok(TestSpec::new(h0.clone(), h1.clone(), ChannelPlan::Bell { r }, DecisionRule::CovSignThreshold))
    })?;
    Ok(vec![res])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseFeedbackParams {
    pub thetas: Vec<f64>,
    pub beta: ComplexAmp,
    pub r: f64,
    pub eps: f64,
    pub delta: f64,
    /// Fixed shot count; None uses the tail bound.
    pub n: Option<u64>,
    pub trials: u64,
}

impl Default for PhaseFeedbackParams {
    fn default() -> Self {
        Self { thetas: vec![-0.3, -0.1, 0.1, 0.3], beta: ComplexAmp::new(2.0, 0.0), r: 2.0, eps: 0.05, delta: 0.05, n: None, trials: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub theta: f64,
    pub n_bell: u64,
    pub n_het: u64,
    /// Shots of |θ̂ − θ| > ε, Bell readout.
    pub miss_bell: Rate,
    /// Shots of sign(θ̂) ≠ sign(θ), Bell readout.
    pub sign_err_bell: Rate,
    pub miss_het: Rate,
    pub sign_err_het: Rate,
}

/// N ≥ 2v/(|β|²sin²ε)·ln(1/δ), rounded up.
pub fn phase_bound_n(v: f64, beta_abs2: f64, eps: f64, delta: f64) -> u64 {
    (2.0 * v / (beta_abs2 * eps.sin().powi(2)) * (1.0 / delta).ln()).ceil().max(1.0) as u64
}

/// Coverage of the beacon phase estimate at the tail-bound shot count, for
/// Bell (noise v(θ)) and heterodyne (noise ½) readout.
pub fn scenario_phase_feedback(p: &PhaseFeedbackParams, seed: u64) -> Result<Vec<PhaseRow>, HarnessError> {
    check_grid("thetas", &p.thetas)?;
    if let Some(t) = p.thetas.iter().find(|t| t.abs() > FRAC_PI_4) {
        return Err(invalid("thetas", format!("|θ| must be at most π/4, got {t}")));
    }
    if !(p.eps > 0.0 && p.delta > 0.0 && p.delta < 1.0) {
        return Err(invalid("eps/delta", "need ε > 0 and δ ∈ (0, 1)"));
    }
    if p.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let r = SqueezeParam::new(p.r)?;
    let b2 = p.beta.norm_sqr();
    if b2 == 0.0 {
        return Err(HarnessError::Estimator(crate::estimators::EstimatorError::PhaseUnresolvable { mean: 0.0, se: 0.0 }));
    }
    let mut rows = Vec::with_capacity(p.thetas.len());
    for (i, &theta) in p.thetas.iter().enumerate() {
        let law = DisplacementLaw::RotatedBeacon { beta: p.beta, theta };
        let n_bell = p.n.unwrap_or_else(|| phase_bound_n(beacon_variance(r, theta), b2, p.eps, p.delta));
        let n_het = p.n.unwrap_or_else(|| phase_bound_n(0.5, b2, p.eps, p.delta));
        let mut rates = Vec::with_capacity(4);
        for (k, (plan, n)) in [(ChannelPlan::Bell { r: p.r }, n_bell), (ChannelPlan::Heterodyne, n_het)].into_iter().enumerate() {
            let counts = (0..p.trials)
                .into_par_iter()
                .map(|t| -> Result<(u64, u64), HarnessError> {
                    let s = derive(seed, &[i as u64, k as u64, t]);
                    let rec = sample_record(&law, &plan, None, n as usize, s)?;
                    let est = estimate_phase(&rec, p.beta)?.value.re;
                    let miss = u64::from((est - theta).abs() > p.eps);
                    let sign = u64::from(theta != 0.0 && est.signum() != theta.signum());
                    Ok((miss, sign))
                })
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
            rates.push(Rate::new(counts.0, p.trials));
            rates.push(Rate::new(counts.1, p.trials));
        }
        rows.push(PhaseRow {
            theta,
            n_bell,
            n_het,
            miss_bell: rates[0],
            sign_err_bell: rates[1],
            miss_het: rates[2],
            sign_err_het: rates[3],
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParityParams {
    pub n: u32,
    pub delta: f64,
    pub trials: u64,
    /// Shot count of the coherent run.
    pub n_coherent: u64,
}

impl Default for ParityParams {
    fn default() -> Self {
        Self { n: 16, delta: 0.05, trials: 400, n_coherent: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub n: u32,
    pub k_star: f64,
    pub mu_squeezed: f64,
    pub mu_coherent: f64,
    pub n_squeezed: u64,
    /// Max per-hypothesis error of the squeezed test at `n_squeezed`.
    pub squeezed_error: Rate,
    pub n_coherent: u64,
    /// Balanced error of the coherent test at `n_coherent`.
    pub coherent_failure: Rate,
}

/// μ = exp(−V·k⋆²/2) for readout noise variance V.
pub fn parity_mu(v: f64, k_star: f64) -> f64 {
    (-v * k_star * k_star / 2.0).exp()
}

/// Kicks of size 1/√n, so the parity witness at k⋆ = π√n/2 flips sign with
/// each kick. Squeezed homodyne uses r = ½ ln n; the coherent probe has V = ½.
pub fn scenario_parity(p: &ParityParams, seed: u64) -> Result<ParityReport, HarnessError> {
    if !(4..=25).contains(&p.n) {
        return Err(invalid("n", format!("must lie in [4, 25], got {}", p.n)));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    let n = p.n as f64;
    let kick = 1.0 / n.sqrt();
    let k_star = std::f64::consts::PI * n.sqrt() / 2.0;
    let h0 = DisplacementLaw::ParityKicks { n: p.n, kick, constrained: true };
    let h1 = DisplacementLaw::ParityKicks { n: p.n, kick, constrained: false };
    let rule = DecisionRule::ParityWitness { k_star };
    let r_sq = 0.5 * n.ln();
    let mu_squeezed = parity_mu(SqueezeParam::new(r_sq)?.nu(), k_star);
    let mu_coherent = parity_mu(0.5, k_star);
    let n_squeezed = (64.0 * (1.0 / p.delta).ln()).ceil() as u64;
    let squeezed = TestSpec::new(h0.clone(), h1.clone(), ChannelPlan::Homodyne { angles: vec![0.0], r: r_sq }, rule.clone());
    let coherent = TestSpec::new(h0, h1, ChannelPlan::Homodyne { angles: vec![0.0], r: 0.0 }, rule);
    let sq = run_binary_test(&squeezed, n_squeezed, p.trials, derive(seed, &[0]))?;
    let coh = run_binary_test(&coherent, p.n_coherent, p.trials, derive(seed, &[1]))?;
    Ok(ParityReport {
        n: p.n,
        k_star,
        mu_squeezed,
        mu_coherent,
        n_squeezed,
        squeezed_error: sq.max,
        n_coherent: p.n_coherent,
        coherent_failure: coh.average(),
    })
}
