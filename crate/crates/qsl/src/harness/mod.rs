//! Binary hypothesis tests, sample-complexity search and the scenario sweeps.
//!
//! Every decision rule reduces an N-shot record to one statistic and
//! compares it with the midpoint of the statistic's per-shot expectation
//! under the two hypotheses. Expectations come from the Gaussian-mixture
//! form of the laws plus the channel noise, so no pilot runs are needed.

mod calibrate;
mod config;
mod output;
mod scenarios;
mod search;

pub use calibrate::{Calibration, ObsModel};
pub use config::{load_config, parse_config, run_config, ExperimentConfig, ScenarioOutput, SCENARIOS};
pub use output::{read_sweep_csv, write_report_json, write_results, write_sweep_csv, Results, SweepRow, CSV_HEADER};
pub use scenarios::{
    delta_pair, gaussian_pair, parity_mu, phase_bound_n, scenario_delta_wedge, scenario_em_field, scenario_gaussian_pair, scenario_parity,
    scenario_phase_feedback, scenario_squeezing_scaling, DeltaWedgeParams, EmFieldParams, GaussianPairParams, ParityParams,
    ParityReport, PhaseFeedbackParams, PhaseRow, SqueezingScalingParams, SweepPoint, SweepResult,
};
pub use search::{empirical_sample_complexity, NStar, SearchOptions};

use crate::channels::{
    beacon_variance, bell_sample_with_noise, heterodyne_sample, homodyne_sample, ChannelError, MeasurementRecord, SqueezeParam,
};
use crate::estimators::estimate_phase;
use crate::rng::{derive, Stream, AUX_STREAM};
use crate::signals::DisplacementLaw;
use crate::stats::Rate;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Ot(#[from] crate::ot::OtError),
    #[error(transparent)]
    Estimator(#[from] crate::estimators::EstimatorError),
    #[error("incompatible test spec: {0}")]
    Incompatible(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("bracket exhausted: error target not met at N = {n_hi}{}", .rate.map(|r| format!(" (error {:.4}, CI [{:.4}, {:.4}])", r.rate(), r.lo, r.hi)).unwrap_or_else(|| " (hypotheses are indistinguishable)".into()))]
    BracketExhausted { n_hi: u64, rate: Option<Rate> },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum ChannelPlan {
    Bell { r: f64 },
    /// Each test uses the single angle with the best analytic separation.
    Homodyne { angles: Vec<f64>, r: f64 },
    Heterodyne,
}

impl ChannelPlan {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelPlan::Bell { .. } => "bell",
            ChannelPlan::Homodyne { .. } => "homodyne",
            ChannelPlan::Heterodyne => "heterodyne",
        }
    }

    fn complex(&self) -> bool {
        !matches!(self, ChannelPlan::Homodyne { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DecisionRule {
    /// Fraction of shots with Re ζ·Im ζ ≥ 0.
    QuadrantSign,
    /// Mean of |Y|.
    SignCorrectedMeanThreshold,
    /// Mean of Y².
    VarianceThreshold,
    /// Mean of Re ζ·Im ζ.
    CovSignThreshold,
    /// |mean of e^{ik⋆Y}|.
    ParityWitness { k_star: f64 },
    /// Sign of the estimated beacon rotation.
    PhaseSign,
}

fn default_uses() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub h0: DisplacementLaw,
    pub h1: DisplacementLaw,
    pub channel: ChannelPlan,
    pub rule: DecisionRule,
    /// Channel uses per round; a test at N rounds draws N·uses shots.
    #[serde(default = "default_uses")]
    pub uses_per_round: u32,
}

impl TestSpec {
    pub fn new(h0: DisplacementLaw, h1: DisplacementLaw, channel: ChannelPlan, rule: DecisionRule) -> Self {
        Self { h0, h1, channel, rule, uses_per_round: 1 }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.h0.validate().map_err(ChannelError::from)?;
        self.h1.validate().map_err(ChannelError::from)?;
        if self.uses_per_round == 0 {
            return Err(invalid("uses_per_round", "must be at least 1"));
        }
        match &self.channel {
            ChannelPlan::Bell { r } => {
                SqueezeParam::new(*r)?;
            }
            ChannelPlan::Homodyne { angles, r } => {
                SqueezeParam::new(*r)?;
                if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
                    return Err(invalid("channel.angles", "need at least one finite angle"));
                }
            }
            ChannelPlan::Heterodyne => {}
        }
        let needs_complex = matches!(self.rule, DecisionRule::QuadrantSign | DecisionRule::CovSignThreshold | DecisionRule::PhaseSign);
        if needs_complex != self.channel.complex() {
            return Err(HarnessError::Incompatible(format!(
                "rule {:?} needs {} records but the channel is {}",
                self.rule,
                if needs_complex { "two-quadrature" } else { "homodyne" },
                self.channel.name()
            )));
        }
        if let DecisionRule::PhaseSign = self.rule {
            match (&self.h0, &self.h1) {
                (DisplacementLaw::RotatedBeacon { beta: b0, theta: t0 }, DisplacementLaw::RotatedBeacon { beta: b1, theta: t1 })
                    if b0 == b1 && t0.signum() != t1.signum() => {}
                _ => {
                    return Err(HarnessError::Incompatible(
                        "phase_sign needs two rotated beacons with a shared beta and opposite angle signs".into(),
                    ))
                }
            }
        }
        if let DecisionRule::ParityWitness { k_star } = self.rule {
            if !(k_star.is_finite() && k_star != 0.0) {
                return Err(invalid("rule.k_star", "must be finite and nonzero"));
            }
        }
        Ok(())
    }
}

/// Outcome of [`run_binary_test`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryTestResult {
    pub n: u64,
    /// The larger of the two per-hypothesis error rates.
    pub max: Rate,
    pub per_hypothesis: [Rate; 2],
    pub threshold: f64,
    pub angle: Option<f64>,
}

impl BinaryTestResult {
    /// Error under balanced priors.
    pub fn average(&self) -> Rate {
        let [a, b] = self.per_hypothesis;
        Rate::new(a.errors + b.errors, a.trials + b.trials)
    }
}

fn bell_noise(law: &DisplacementLaw, r: SqueezeParam) -> f64 {
    match law {
        DisplacementLaw::RotatedBeacon { theta, .. } => beacon_variance(r, *theta),
        _ => r.nu(),
    }
}

/// One record of `shots` channel uses under `law`.
pub fn sample_record(
    law: &DisplacementLaw,
    plan: &ChannelPlan,
    angle: Option<f64>,
    shots: usize,
    seed: u64,
) -> Result<MeasurementRecord, HarnessError> {
    Ok(match plan {
        ChannelPlan::Bell { r } => {
            let r = SqueezeParam::new(*r)?;
            bell_sample_with_noise(law, r, bell_noise(law, r), shots, seed)?
        }
        ChannelPlan::Heterodyne => heterodyne_sample(law, shots, seed)?,
        ChannelPlan::Homodyne { angles, r } => {
            homodyne_sample(law, angle.unwrap_or(angles[0]), SqueezeParam::new(*r)?, shots, seed)?
        }
    })
}

fn statistic(rule: &DecisionRule, rec: &MeasurementRecord, beta_ref: Option<Complex64>) -> Option<f64> {
    let mean = |it: &mut dyn Iterator<Item = f64>, n: usize| crate::stats::sum(it) / n as f64;
    match rule {
        DecisionRule::QuadrantSign => {
            let d = rec.complex()?;
            Some(d.iter().filter(|z| z.re * z.im >= 0.0).count() as f64 / d.len() as f64)
        }
        DecisionRule::CovSignThreshold => {
            let d = rec.complex()?;
            Some(mean(&mut d.iter().map(|z| z.re * z.im), d.len()))
        }
        DecisionRule::VarianceThreshold => {
            let y = rec.real()?;
            Some(mean(&mut y.iter().map(|v| v * v), y.len()))
        }
        DecisionRule::SignCorrectedMeanThreshold => {
            let y = rec.real()?;
            Some(mean(&mut y.iter().map(|v| v.abs()), y.len()))
        }
        DecisionRule::ParityWitness { k_star } => {
            let y = rec.real()?;
            let (s, c): (Vec<f64>, Vec<f64>) = y.iter().map(|v| (k_star * v).sin_cos()).unzip();
            let n = y.len();
            Some(Complex64::new(mean(&mut c.into_iter(), n), mean(&mut s.into_iter(), n)).norm())
        }
        DecisionRule::PhaseSign => estimate_phase(rec, beta_ref?).ok().map(|e| e.value.re),
    }
}

/// Simulate `trials` experiments of N rounds under each hypothesis and apply
/// the calibrated rule.
pub fn run_binary_test(spec: &TestSpec, n: u64, trials: u64, seed: u64) -> Result<BinaryTestResult, HarnessError> {
    let cal = Calibration::new(spec)?;
    run_calibrated(spec, &cal, n, trials, seed)
}

pub(crate) fn run_calibrated(spec: &TestSpec, cal: &Calibration, n: u64, trials: u64, seed: u64) -> Result<BinaryTestResult, HarnessError> {
    if n == 0 || trials == 0 {
        return Err(invalid(if n == 0 { "N" } else { "trials" }, "must be at least 1"));
    }
    let shots = usize::try_from(n * spec.uses_per_round as u64).map_err(|_| invalid("N", "too large"))?;
    let beta_ref = match &spec.h0 {
        DisplacementLaw::RotatedBeacon { beta, .. } => Some(*beta),
        _ => None,
    };
    let mut per = [Rate::new(0, trials); 2];
    for (hyp, law) in [&spec.h0, &spec.h1].into_iter().enumerate() {
        let errors = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<u64, HarnessError> {
                let s = derive(seed, &[hyp as u64, t, n]);
                let rec = sample_record(law, &spec.channel, cal.angle, shots, s)?;
                let decided = match statistic(&spec.rule, &rec, beta_ref) {
                    Some(v) => cal.decide(v),
                    None => None,
                }
                .unwrap_or_else(|| usize::from(Stream::new(s, AUX_STREAM).coin()));
                Ok(u64::from(decided != hyp))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        per[hyp] = Rate::new(errors, trials);
    }
    let max = if per[1].errors > per[0].errors { per[1] } else { per[0] };
    Ok(BinaryTestResult { n, max, per_hypothesis: per, threshold: cal.threshold, angle: cal.angle })
}
