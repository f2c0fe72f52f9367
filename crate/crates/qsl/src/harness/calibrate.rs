use super::{invalid, ChannelPlan, DecisionRule, HarnessError, TestSpec};
use crate::channels::SqueezeParam;
use crate::ot::adaptive_simpson;
use crate::signals::{Cov2, DisplacementLaw};
use crate::stats::{normal_cdf, normal_pdf};
use num_complex::Complex64;

/// Per-shot observation law of one hypothesis: a Gaussian mixture on the
/// recorded value, channel noise included.
#[derive(Clone, Debug, PartialEq)]
pub enum ObsModel {
    /// (weight, mean (Re, Im), covariance) of the complex record.
    Planar(Vec<(f64, [f64; 2], Cov2)>),
    /// (weight, mean, variance) of the homodyne record.
    Line(Vec<(f64, f64, f64)>),
}

impl ObsModel {
    pub fn new(law: &DisplacementLaw, plan: &ChannelPlan, angle: Option<f64>) -> Result<Self, HarnessError> {
        let comps = law
            .components()
            .ok_or_else(|| HarnessError::Incompatible(format!("{} has no single-mode mixture form", law.kind())))?;
        Ok(match plan {
            ChannelPlan::Bell { r } => {
                let r = SqueezeParam::new(*r)?;
                let noise = Cov2::iso(super::bell_noise(law, r));
                ObsModel::Planar(comps.iter().map(|c| (c.weight, [c.mean.re, c.mean.im], c.cov.add(&noise))).collect())
            }
            ChannelPlan::Heterodyne => {
                let noise = Cov2::iso(0.5);
                ObsModel::Planar(comps.iter().map(|c| (c.weight, [c.mean.re, c.mean.im], c.cov.add(&noise))).collect())
            }
            ChannelPlan::Homodyne { angles, r } => {
                let nu = SqueezeParam::new(*r)?.nu();
                let th = angle.unwrap_or(angles[0]);
                ObsModel::Line(
                    comps
                        .iter()
                        .map(|c| {
                            let (m, v) = c.projected(th);
                            (c.weight, m, v + nu)
                        })
                        .collect(),
                )
            }
        })
    }

    /// Per-shot mean and variance of the statistic's summand. For the parity
    /// witness the mean is |E e^{ikY}| and the variance is bounded by 1.
    pub fn moments(&self, rule: &DecisionRule) -> Result<(f64, f64), HarnessError> {
        match (self, rule) {
            (ObsModel::Planar(cs), DecisionRule::QuadrantSign) => {
                let mut p = 0.0;
                for (w, m, s) in cs {
                    p += w * quadrant_prob(*m, s)?;
                }
                Ok((p, p * (1.0 - p)))
            }
            (ObsModel::Planar(cs), DecisionRule::CovSignThreshold) => {
                let (mut e, mut e2) = (0.0, 0.0);
                for (w, [mx, my], s) in cs {
                    e += w * (mx * my + s.c);
                    e2 += w
                        * ((mx * mx + s.sigma_x2) * (my * my + s.sigma_p2) + 2.0 * s.c * s.c + 4.0 * mx * my * s.c);
                }
                Ok((e, e2 - e * e))
            }
            (ObsModel::Line(cs), DecisionRule::VarianceThreshold) => {
                let (mut e, mut e2) = (0.0, 0.0);
                for (w, m, v) in cs {
                    e += w * (m * m + v);
                    e2 += w * (m.powi(4) + 6.0 * m * m * v + 3.0 * v * v);
                }
                Ok((e, e2 - e * e))
            }
            (ObsModel::Line(cs), DecisionRule::SignCorrectedMeanThreshold) => {
                let (mut e, mut e2) = (0.0, 0.0);
                for (w, m, v) in cs {
                    let s = v.sqrt();
                    let abs = if s == 0.0 {
                        m.abs()
                    } else {
                        s * (2.0 / std::f64::consts::PI).sqrt() * (-m * m / (2.0 * v)).exp() + m * (1.0 - 2.0 * normal_cdf(-m / s))
                    };
                    e += w * abs;
                    e2 += w * (m * m + v);
                }
                Ok((e, e2 - e * e))
            }
            (ObsModel::Line(cs), DecisionRule::ParityWitness { k_star }) => {
                let k = *k_star;
                let z: Complex64 = cs.iter().map(|(w, m, v)| w * Complex64::from_polar((-k * k * v / 2.0).exp(), k * m)).sum();
                Ok((z.norm(), 1.0))
            }
            _ => Err(HarnessError::Incompatible(format!("rule {rule:?} does not match the channel"))),
        }
    }
}

/// P(X·Y ≥ 0) for (X, Y) ~ N(m, s), by integrating over X.
fn quadrant_prob(m: [f64; 2], s: &Cov2) -> Result<f64, HarnessError> {
    let (sx, sy) = (s.sigma_x2.sqrt(), s.sigma_p2.sqrt());
    let pos = |mean: f64, sd: f64| {
        if sd == 0.0 {
            if mean >= 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            normal_cdf(mean / sd)
        }
    };
    if sx == 0.0 {
        let py = pos(m[1], sy);
        return Ok(if m[0] >= 0.0 { py } else { 1.0 - py });
    }
    let slope = s.c / s.sigma_x2;
    let cond_sd = (s.sigma_p2 - s.c * slope).max(0.0).sqrt();
    let f = |x: f64, upper: bool| {
        let py = pos(m[1] + slope * (x - m[0]), cond_sd);
        normal_pdf((x - m[0]) / sx) / sx * if upper { py } else { 1.0 - py }
    };
    let (lo, hi) = (m[0] - 10.0 * sx, m[0] + 10.0 * sx);
    let mut p = 0.0;
    if hi > 0.0 {
        p += adaptive_simpson(|x| f(x, true), lo.max(0.0), hi, 1e-12)?;
    }
    if lo < 0.0 {
        p += adaptive_simpson(|x| f(x, false), lo, hi.min(0.0), 1e-12)?;
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Threshold and orientation of a decision rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    /// Hypothesis decided when the statistic exceeds the threshold.
    pub high: usize,
    /// Homodyne angle in use.
    pub angle: Option<f64>,
    /// Per-shot expectations under H0 and H1.
    pub expectations: [f64; 2],
    /// Per-shot standard deviations under H0 and H1.
    pub sds: [f64; 2],
}

impl Calibration {
    pub fn new(spec: &TestSpec) -> Result<Self, HarnessError> {
        spec.validate()?;
        if let DecisionRule::PhaseSign = spec.rule {
            let high = match &spec.h1 {
                DisplacementLaw::RotatedBeacon { theta, .. } if *theta > 0.0 => 1,
                _ => 0,
            };
            return Ok(Self { threshold: 0.0, high, angle: None, expectations: [0.0; 2], sds: [0.0; 2] });
        }
        let angles: Vec<Option<f64>> = match &spec.channel {
            ChannelPlan::Homodyne { angles, .. } => angles.iter().map(|a| Some(*a)).collect(),
            _ => vec![None],
        };
        let mut best: Option<(f64, Self)> = None;
        for angle in angles {
            let (e0, v0) = ObsModel::new(&spec.h0, &spec.channel, angle)?.moments(&spec.rule)?;
            let (e1, v1) = ObsModel::new(&spec.h1, &spec.channel, angle)?.moments(&spec.rule)?;
            if !(e0.is_finite() && e1.is_finite()) {
                return Err(invalid("laws", "per-shot expectation is not finite"));
            }
            let (s0, s1) = (v0.max(0.0).sqrt(), v1.max(0.0).sqrt());
            let gap = (e1 - e0).abs();
            let score = if gap == 0.0 { 0.0 } else { gap / (s0 + s1).max(f64::MIN_POSITIVE) };
            let cal = Self {
                threshold: 0.5 * (e0 + e1),
                high: usize::from(e1 > e0),
                angle,
                expectations: [e0, e1],
                sds: [s0, s1],
            };
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, cal));
            }
        }
        Ok(best.expect("at least one angle").1)
    }

    /// True when the two per-shot expectations coincide, so no N separates
    /// the hypotheses under this rule.
    pub fn indistinguishable(&self) -> bool {
        self.expectations[0] == self.expectations[1] && self.sds != [0.0; 2]
    }

    pub fn decide(&self, stat: f64) -> Option<usize> {
        if stat > self.threshold {
            Some(self.high)
        } else if stat < self.threshold {
            Some(1 - self.high)
        } else {
            None
        }
    }
}
