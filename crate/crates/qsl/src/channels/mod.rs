//! Readout channels as additive Gaussian noise on displacement laws.
//!
//! - Bell: ζ = α + Z, each quadrature of Z ~ N(0, ν_r), ν_r = ½e^{−2r}.
//! - Homodyne at θ: Y = √2·Re(e^{−iθ}α) + G, G ~ N(0, ν_r), squeezing
//!   aligned to the measured quadrature.
//! - Heterodyne: ζ = α + Z with per-quadrature variance ½ whatever r is.
//!
//! Law draws use stream 0 of the record seed and noise uses stream 1.

mod record;

pub use record::{read_record, read_record_file, write_record, write_record_file};

use crate::rng::{Stream, LAW_STREAM, NOISE_STREAM};
use crate::signals::{ComplexAmp, Cov2, DisplacementLaw, LawError, Sampler};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{op} needs a {expected} record, got {got}")]
    WrongChannel { op: &'static str, expected: &'static str, got: Channel },
    #[error("record I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("record format: {0}")]
    Format(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ChannelError {
    ChannelError::Invalid { field: field.to_string(), reason: reason.into() }
}

/// Squeezing parameter r ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SqueezeParam(f64);

impl SqueezeParam {
    pub fn new(r: f64) -> Result<Self, ChannelError> {
        if r.is_finite() && r >= 0.0 {
            Ok(Self(r))
        } else {
            Err(invalid("r", format!("squeezing must be finite and nonnegative, got {r}")))
        }
    }

    /// Squeezing that gives per-quadrature noise `nu` ∈ (0, ½].
    pub fn from_nu(nu: f64) -> Result<Self, ChannelError> {
        Self::new(-0.5 * (2.0 * nu).ln())
    }

    pub fn r(&self) -> f64 {
        self.0
    }

    /// Per-quadrature noise ν_r = ½e^{−2r}.
    pub fn nu(&self) -> f64 {
        0.5 * (-2.0 * self.0).exp()
    }

    /// Complex Bell noise variance e^{−2r} = 2ν_r.
    pub fn bell_variance(&self) -> f64 {
        (-2.0 * self.0).exp()
    }
}

/// Per-quadrature Bell noise for the rotated two-mode beacon,
/// v(θ) = ½(cosh 2r − sinh 2r·cos θ); equals ν_r at θ = 0.
pub fn beacon_variance(r: SqueezeParam, theta: f64) -> f64 {
    let t = 2.0 * r.r();
    0.5 * (t.cosh() - t.sinh() * theta.cos())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Bell,
    Homodyne,
    Heterodyne,
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Bell => "bell",
            Channel::Homodyne => "homodyne",
            Channel::Heterodyne => "heterodyne",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Channel {
    type Err = ChannelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bell" => Ok(Channel::Bell),
            "homodyne" => Ok(Channel::Homodyne),
            "heterodyne" => Ok(Channel::Heterodyne),
            _ => Err(invalid("channel", format!("unknown channel `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Samples {
    /// Shot-major, `n_modes` entries per shot.
    Complex { n_modes: usize, data: Vec<ComplexAmp> },
    Real(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub channel: Channel,
    /// Squeezing, for Bell and homodyne records.
    pub r: Option<f64>,
    /// Measured quadrature angle, homodyne only.
    pub theta: Option<f64>,
    pub seed: u64,
    pub law_descriptor: String,
    pub samples: Samples,
}

impl MeasurementRecord {
    pub fn len(&self) -> usize {
        match &self.samples {
            Samples::Complex { n_modes, data } => data.len() / n_modes,
            Samples::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_modes(&self) -> usize {
        match &self.samples {
            Samples::Complex { n_modes, .. } => *n_modes,
            Samples::Real(_) => 1,
        }
    }

    pub fn complex(&self) -> Option<&[ComplexAmp]> {
        match &self.samples {
            Samples::Complex { data, .. } => Some(data),
            Samples::Real(_) => None,
        }
    }

    pub fn shots(&self) -> impl Iterator<Item = &[ComplexAmp]> {
        let (n, data): (usize, &[ComplexAmp]) = match &self.samples {
            Samples::Complex { n_modes, data } => (*n_modes, data),
            Samples::Real(_) => (1, &[]),
        };
        data.chunks(n)
    }

    pub fn real(&self) -> Option<&[f64]> {
        match &self.samples {
            Samples::Real(v) => Some(v),
            Samples::Complex { .. } => None,
        }
    }

    /// Squeezing of a Bell record; errors for other channels.
    pub fn bell_squeezing(&self, op: &'static str) -> Result<SqueezeParam, ChannelError> {
        match (self.channel, self.r) {
            (Channel::Bell, Some(r)) => SqueezeParam::new(r),
            _ => Err(ChannelError::WrongChannel { op, expected: "bell", got: self.channel }),
        }
    }
}

fn check_n(n: usize) -> Result<(), ChannelError> {
    if n == 0 {
        Err(invalid("N", "need at least one shot"))
    } else {
        Ok(())
    }
}

fn complex_record(
    law: &DisplacementLaw,
    noise_var: f64,
    n: usize,
    seed: u64,
) -> Result<(usize, Vec<ComplexAmp>), ChannelError> {
    check_n(n)?;
    let sampler = Sampler::new(law)?;
    let modes = law.n_modes();
    let mut law_rng = Stream::new(seed, LAW_STREAM);
    let mut noise_rng = Stream::new(seed, NOISE_STREAM);
    let sd = noise_var.sqrt();
    let mut data = vec![ComplexAmp::new(0.0, 0.0); n * modes];
    for shot in data.chunks_mut(modes) {
        sampler.draw(&mut law_rng, shot)?;
        for z in shot.iter_mut() {
            let nx = noise_rng.normal();
            let np = noise_rng.normal();
            z.re += sd * nx;
            z.im += sd * np;
        }
    }
    Ok((modes, data))
}

pub fn bell_sample(law: &DisplacementLaw, r: SqueezeParam, n: usize, seed: u64) -> Result<MeasurementRecord, ChannelError> {
    bell_sample_with_noise(law, r, r.nu(), n, seed)
}

/// Bell readout with an explicit per-quadrature noise variance; used for the
/// rotated beacon, whose noise is [`beacon_variance`] rather than ν_r.
pub fn bell_sample_with_noise(
    law: &DisplacementLaw,
    r: SqueezeParam,
    noise_var: f64,
    n: usize,
    seed: u64,
) -> Result<MeasurementRecord, ChannelError> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(invalid("noise_var", "must be finite and nonnegative"));
    }
    let (n_modes, data) = complex_record(law, noise_var, n, seed)?;
    Ok(MeasurementRecord {
        channel: Channel::Bell,
        r: Some(r.r()),
        theta: None,
        seed,
        law_descriptor: law.descriptor(),
        samples: Samples::Complex { n_modes, data },
    })
}

pub fn heterodyne_sample(law: &DisplacementLaw, n: usize, seed: u64) -> Result<MeasurementRecord, ChannelError> {
    let (n_modes, data) = complex_record(law, 0.5, n, seed)?;
    Ok(MeasurementRecord {
        channel: Channel::Heterodyne,
        r: None,
        theta: None,
        seed,
        law_descriptor: law.descriptor(),
        samples: Samples::Complex { n_modes, data },
    })
}

pub fn homodyne_sample(
    law: &DisplacementLaw,
    theta: f64,
    r: SqueezeParam,
    n: usize,
    seed: u64,
) -> Result<MeasurementRecord, ChannelError> {
    check_n(n)?;
    if !theta.is_finite() {
        return Err(invalid("theta", "must be finite"));
    }
    if law.n_modes() != 1 {
        return Err(invalid("law", "homodyne readout is single-mode"));
    }
    let sampler = Sampler::new(law)?;
    let mut law_rng = Stream::new(seed, LAW_STREAM);
    let mut noise_rng = Stream::new(seed, NOISE_STREAM);
    let sd = r.nu().sqrt();
    let (s, c) = theta.sin_cos();
    let mut alpha = [ComplexAmp::new(0.0, 0.0)];
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        sampler.draw(&mut law_rng, &mut alpha)?;
        let t = std::f64::consts::SQRT_2 * (c * alpha[0].re + s * alpha[0].im);
        ys.push(t + sd * noise_rng.normal());
    }
    Ok(MeasurementRecord {
        channel: Channel::Homodyne,
        r: Some(r.r()),
        theta: Some(theta),
        seed,
        law_descriptor: law.descriptor(),
        samples: Samples::Real(ys),
    })
}

/// The law convolved with centered Gaussian noise of covariance `extra` on
/// every mode.
pub fn compose_noise(law: &DisplacementLaw, extra: Cov2) -> Result<DisplacementLaw, ChannelError> {
    extra.check_psd("extra_cov")?;
    law.validate()?;
    if extra == Cov2::ZERO {
        return Ok(law.clone());
    }
    Ok(match law {
        DisplacementLaw::GaussianCentered { cov } => DisplacementLaw::GaussianCentered { cov: cov.add(&extra) },
        DisplacementLaw::Blurred { base, extra: e } => DisplacementLaw::Blurred { base: base.clone(), extra: e.add(&extra) },
        other => DisplacementLaw::Blurred { base: Box::new(other.clone()), extra },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Atom;
    use crate::stats::mean_var;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn c(re: f64, im: f64) -> ComplexAmp {
        ComplexAmp::new(re, im)
    }

    fn sq(r: f64) -> SqueezeParam {
        SqueezeParam::new(r).unwrap()
    }

    #[test]
    fn nu_values() {
        assert_eq!(sq(0.0).nu(), 0.5);
        assert!((sq(1.0).nu() - 0.5 * (-2.0f64).exp()).abs() < 1e-16);
        assert!((SqueezeParam::from_nu(0.01).unwrap().nu() - 0.01).abs() < 1e-15);
        assert!(SqueezeParam::new(-0.1).is_err());
    }

    #[test]
    fn heavy_squeezing_pins_samples() {
        let rec = bell_sample(&DisplacementLaw::point(c(2.0, 3.0)), sq(20.0), 200, 1).unwrap();
        for z in rec.complex().unwrap() {
            assert!((z - c(2.0, 3.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn vacuum_bell_noise_is_half() {
        let n = 100_000;
        let rec = bell_sample(&DisplacementLaw::point(c(0.0, 0.0)), sq(0.0), n, 2).unwrap();
        let xs: Vec<f64> = rec.complex().unwrap().iter().map(|z| z.re).collect();
        let (_, v) = mean_var(&xs);
        // SE of a sample variance is v·√(2/N)
        assert!((v - 0.5).abs() < 3.0 * 0.5 * (2.0 / n as f64).sqrt(), "{v}");
    }

    #[test]
    fn bell_cov_adds_nu() {
        let n = 200_000;
        let r = sq(1.0);
        let rec = bell_sample(&DisplacementLaw::gaussian(0.3, 0.2, 0.1), r, n, 3).unwrap();
        let z = rec.complex().unwrap();
        let xp = z.iter().map(|z| z.re * z.im).sum::<f64>() / n as f64;
        let xx = z.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        assert!((xp - 0.1).abs() < 0.005);
        assert!((xx - (0.3 + r.nu())).abs() < 0.01);
    }

    #[test]
    fn homodyne_point_mass() {
        let n = 100_000;
        let r = sq(2.0);
        let rec = homodyne_sample(&DisplacementLaw::point(c(1.0, 0.0)), 0.0, r, n, 4).unwrap();
        let (m, v) = mean_var(rec.real().unwrap());
        assert!((m - SQRT_2).abs() < 4.0 * (r.nu() / n as f64).sqrt());
        assert!((v / r.nu() - 1.0).abs() < 0.02);
        let rec = homodyne_sample(&DisplacementLaw::point(c(1.0, 0.0)), FRAC_PI_2, r, n, 4).unwrap();
        let (m, _) = mean_var(rec.real().unwrap());
        assert!(m.abs() < 4.0 * (r.nu() / n as f64).sqrt());
    }

    #[test]
    fn heterodyne_location_and_noise() {
        let n = 100_000;
        let rec = heterodyne_sample(&DisplacementLaw::point(c(5.0, -5.0)), n, 5).unwrap();
        let xs: Vec<f64> = rec.complex().unwrap().iter().map(|z| z.re).collect();
        let ps: Vec<f64> = rec.complex().unwrap().iter().map(|z| z.im).collect();
        let (mx, vx) = mean_var(&xs);
        let (mp, _) = mean_var(&ps);
        let se = (0.5 / n as f64).sqrt();
        assert!((mx - 5.0).abs() < 3.0 * se);
        assert!((mp + 5.0).abs() < 3.0 * se);
        assert!((vx - 0.5).abs() < 0.01);
    }

    #[test]
    fn records_are_deterministic() {
        let law = DisplacementLaw::gaussian(0.1, 0.2, 0.05);
        assert_eq!(bell_sample(&law, sq(1.0), 100, 9).unwrap(), bell_sample(&law, sq(1.0), 100, 9).unwrap());
        assert_eq!(
            homodyne_sample(&law, 0.3, sq(1.0), 100, 9).unwrap(),
            homodyne_sample(&law, 0.3, sq(1.0), 100, 9).unwrap()
        );
    }

    #[test]
    fn homodyne_rejects_multimode() {
        let law = DisplacementLaw::point_multi(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(homodyne_sample(&law, 0.0, sq(1.0), 10, 0).is_err());
    }

    #[test]
    fn compose_noise_cases() {
        let g = DisplacementLaw::gaussian(0.2, 0.3, 0.1);
        assert_eq!(compose_noise(&g, Cov2::ZERO).unwrap(), g);
        assert_eq!(
            compose_noise(&g, Cov2::new(0.1, 0.1, -0.05)).unwrap(),
            DisplacementLaw::GaussianCentered { cov: Cov2::new(0.2 + 0.1, 0.3 + 0.1, 0.1 - 0.05) }
        );
        assert!(compose_noise(&g, Cov2::new(0.1, 0.1, 0.5)).is_err());
        let d = DisplacementLaw::DeltaMixture { atoms: vec![Atom::single(0.5, 0.1, 0.5), Atom::single(-0.5, -0.1, 0.5)] };
        let blurred = compose_noise(&d, Cov2::iso(0.2)).unwrap();
        let beta = [c(0.4, -0.7)];
        let want = d.char_func(&beta).unwrap() * (-2.0 * 0.2 * 0.65f64).exp();
        assert!((blurred.char_func(&beta).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn beacon_variance_at_zero_is_nu() {
        let r = sq(1.3);
        assert!((beacon_variance(r, 0.0) - r.nu()).abs() < 1e-12);
        assert!(beacon_variance(r, 0.3) > r.nu());
    }
}
