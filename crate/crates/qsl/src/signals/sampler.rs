use super::{waveform::WAVEFORM_SCALE, ComplexAmp, DisplacementLaw, LawError};
use crate::rng::{Stream, LAW_STREAM};

const STALL_LIMIT: u64 = 1_000_000;

/// A law compiled for repeated draws (Cholesky factors, cumulative weights).
#[derive(Clone, Debug)]
pub enum Sampler {
    Gaussian { l: [[f64; 2]; 2] },
    Atoms { cumulative: Vec<f64>, points: Vec<Vec<ComplexAmp>> },
    Modulated { s: f64, eps0: f64, gamma: Vec<ComplexAmp> },
    Parity { n: u32, kick: f64, constrained: bool },
    Scaled { base: Box<Sampler>, factor: ComplexAmp },
    Blurred { base: Box<Sampler>, l: [[f64; 2]; 2] },
}

impl Sampler {
    pub fn new(law: &DisplacementLaw) -> Result<Self, LawError> {
        law.validate()?;
        Ok(Self::compile(law))
    }

    fn compile(law: &DisplacementLaw) -> Self {
        match law {
            DisplacementLaw::GaussianCentered { cov } => Sampler::Gaussian { l: cov.cholesky() },
            DisplacementLaw::DeltaMixture { atoms } => {
                let mut acc = 0.0;
                let cumulative = atoms
                    .iter()
                    .map(|a| {
                        acc += a.weight;
                        acc
                    })
                    .collect();
                Sampler::Atoms { cumulative, points: atoms.iter().map(|a| a.point.clone()).collect() }
            }
            DisplacementLaw::ModulatedGaussian { sigma, eps0, gamma } => Sampler::Modulated {
                s: 1.0 / (2.0 * sigma),
                eps0: *eps0,
                gamma: gamma.clone(),
            },
            DisplacementLaw::ParityKicks { n, kick, constrained } => {
                Sampler::Parity { n: *n, kick: *kick, constrained: *constrained }
            }
            DisplacementLaw::WaveformSinusoid { prior, .. } => {
                Sampler::Scaled { base: Box::new(Self::compile(prior)), factor: WAVEFORM_SCALE }
            }
            DisplacementLaw::RotatedBeacon { beta, theta } => Sampler::Atoms {
                cumulative: vec![1.0],
                points: vec![vec![ComplexAmp::from_polar(1.0, *theta) * beta]],
            },
            DisplacementLaw::Scaled { base, factor } => {
                Sampler::Scaled { base: Box::new(Self::compile(base)), factor: *factor }
            }
            DisplacementLaw::Blurred { base, extra } => {
                Sampler::Blurred { base: Box::new(Self::compile(base)), l: extra.cholesky() }
            }
        }
    }

    /// Draw one displacement into `out` (length = mode count).
    pub fn draw(&self, rng: &mut Stream, out: &mut [ComplexAmp]) -> Result<(), LawError> {
        match self {
            Sampler::Gaussian { l } => out[0] = correlated(rng, l),
            Sampler::Atoms { cumulative, points } => {
                let idx = if cumulative.len() == 1 {
                    0
                } else {
                    let u = rng.uniform() * cumulative[cumulative.len() - 1];
                    cumulative.partition_point(|c| *c <= u).min(cumulative.len() - 1)
                };
                out.copy_from_slice(&points[idx]);
            }
            Sampler::Modulated { s, eps0, gamma } => {
                let bound = 1.0 + 4.0 * eps0;
                let mut tries = 0u64;
                loop {
                    let mut phase = 0.0;
                    for (o, g) in out.iter_mut().zip(gamma) {
                        *o = ComplexAmp::new(s * rng.normal(), s * rng.normal());
                        phase += g.re * o.im - g.im * o.re;
                    }
                    let accept = (1.0 + 4.0 * eps0 * (2.0 * phase).sin()) / bound;
                    if rng.uniform() < accept {
                        break;
                    }
                    tries += 1;
                    if tries >= STALL_LIMIT {
                        return Err(LawError::Stall(tries));
                    }
                }
            }
            Sampler::Parity { n, kick, constrained } => {
                let mut sum = 0i64;
                let mut prod = 1i64;
                for j in 0..*n {
                    let z = if *constrained && j + 1 == *n { prod } else if rng.coin() { 1 } else { -1 };
                    sum += z;
                    prod *= z;
                }
                out[0] = ComplexAmp::new(kick * sum as f64 * std::f64::consts::FRAC_1_SQRT_2, 0.0);
            }
            Sampler::Scaled { base, factor } => {
                base.draw(rng, out)?;
                for o in out.iter_mut() {
                    *o *= factor;
                }
            }
            Sampler::Blurred { base, l } => {
                base.draw(rng, out)?;
                for o in out.iter_mut() {
                    *o += correlated(rng, l);
                }
            }
        }
        Ok(())
    }
}

fn correlated(rng: &mut Stream, l: &[[f64; 2]; 2]) -> ComplexAmp {
    let z0 = rng.normal();
    let z1 = rng.normal();
    ComplexAmp::new(l[0][0] * z0, l[1][0] * z0 + l[1][1] * z1)
}

/// `n_shots` i.i.d. draws; deterministic in `seed`.
pub fn sample_law(law: &DisplacementLaw, n_shots: usize, seed: u64) -> Result<Vec<Vec<ComplexAmp>>, LawError> {
    if n_shots == 0 {
        return Err(super::invalid("n_shots", "must be at least 1"));
    }
    let sampler = Sampler::new(law)?;
    let mut rng = Stream::new(seed, LAW_STREAM);
    let n = law.n_modes();
    (0..n_shots)
        .map(|_| {
            let mut v = vec![ComplexAmp::new(0.0, 0.0); n];
            sampler.draw(&mut rng, &mut v).map(|_| v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{Atom, Cov2};
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> ComplexAmp {
        ComplexAmp::new(re, im)
    }

    #[test]
    fn point_mass_repeats() {
        let draws = sample_law(&DisplacementLaw::point(c(1.0, 0.0)), 3, 9).unwrap();
        assert_eq!(draws, vec![vec![c(1.0, 0.0)]; 3]);
    }

    #[test]
    fn gaussian_identity_cov() {
        let n = 100_000;
        let draws = sample_law(&DisplacementLaw::gaussian(1.0, 1.0, 0.0), n, 3).unwrap();
        let (mut xx, mut pp, mut xp) = (0.0, 0.0, 0.0);
        for d in &draws {
            xx += d[0].re * d[0].re;
            pp += d[0].im * d[0].im;
            xp += d[0].re * d[0].im;
        }
        let nf = n as f64;
        assert!((xx / nf - 1.0).abs() < 0.05);
        assert!((pp / nf - 1.0).abs() < 0.05);
        assert!((xp / nf).abs() < 0.05);
    }

    #[test]
    fn parity_strings_are_even() {
        let law = DisplacementLaw::ParityKicks { n: 4, kick: 1.0, constrained: true };
        for d in sample_law(&law, 2000, 5).unwrap() {
            let x = (d[0].re * SQRT_2).round() as i64;
            assert!([-4, -2, 0, 2, 4].contains(&x));
            assert!((d[0].re * SQRT_2 - x as f64).abs() < 1e-12);
            // number of −1 entries is (4 − X)/2, which must be even
            assert_eq!(((4 - x) / 2) % 2, 0, "X={x}");
            assert_eq!(d[0].im, 0.0);
        }
    }

    #[test]
    fn parity_unconstrained_is_fair() {
        let n = 20_000;
        let law = DisplacementLaw::ParityKicks { n: 3, kick: 1.0, constrained: false };
        let odd = sample_law(&law, n, 6)
            .unwrap()
            .iter()
            .filter(|d| {
                let x = (d[0].re * SQRT_2).round() as i64;
                ((3 - x) / 2) % 2 == 1
            })
            .count();
        let f = odd as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 / (n as f64).sqrt(), "{f}");
    }

    #[test]
    fn modulated_acceptance_rate() {
        let law = DisplacementLaw::ModulatedGaussian { sigma: 0.5, eps0: 0.25, gamma: vec![c(0.3, 0.8), c(-0.2, 0.1)] };
        let Sampler::Modulated { s, eps0, gamma } = Sampler::new(&law).unwrap() else { unreachable!() };
        let mut rng = Stream::new(1, 0);
        let (mut acc, total) = (0u32, 20_000u32);
        for _ in 0..total {
            let mut phase = 0.0;
            for g in &gamma {
                let o = c(s * rng.normal(), s * rng.normal());
                phase += g.re * o.im - g.im * o.re;
            }
            if rng.uniform() < (1.0 + 4.0 * eps0 * (2.0 * phase).sin()) / (1.0 + 4.0 * eps0) {
                acc += 1;
            }
        }
        // the exact rate is 1/(1+4·eps0) = 1/2, above the (1−4ε0)/(1+4ε0) floor
        assert!((acc as f64 / total as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn modulated_moments_match_samples() {
        let law = DisplacementLaw::ModulatedGaussian { sigma: 0.6, eps0: 0.25, gamma: vec![c(0.4, -0.3)] };
        let m = law.moments().unwrap();
        let n = 200_000;
        let draws = sample_law(&law, n, 12).unwrap();
        let mx = draws.iter().map(|d| d[0].re).sum::<f64>() / n as f64;
        let mp = draws.iter().map(|d| d[0].im).sum::<f64>() / n as f64;
        let se = (m.cov[0] / n as f64).sqrt();
        assert!((mx - m.mean[0].re).abs() < 4.0 * se, "{mx} vs {}", m.mean[0].re);
        assert!((mp - m.mean[0].im).abs() < 4.0 * se, "{mp} vs {}", m.mean[0].im);
        let vx = draws.iter().map(|d| (d[0].re - mx).powi(2)).sum::<f64>() / n as f64;
        assert!((vx / m.cov[0] - 1.0).abs() < 0.02);
    }

    #[test]
    fn blurred_matches_analytic_cov() {
        let base = DisplacementLaw::DeltaMixture { atoms: vec![Atom::single(1.0, 0.0, 0.5), Atom::single(-1.0, 0.0, 0.5)] };
        let law = DisplacementLaw::Blurred { base: Box::new(base), extra: Cov2::new(0.2, 0.1, 0.05) };
        let m = law.moments().unwrap();
        assert!((m.cov_at(0, 0) - 1.2).abs() < 1e-15);
        assert!((m.cov_at(0, 1) - 0.05).abs() < 1e-15);
        let n = 100_000;
        let draws = sample_law(&law, n, 4).unwrap();
        let xp = draws.iter().map(|d| d[0].re * d[0].im).sum::<f64>() / n as f64;
        assert!((xp - 0.05).abs() < 0.01);
    }

    #[test]
    fn deterministic_in_seed() {
        let law = DisplacementLaw::gaussian(0.3, 0.2, 0.1);
        assert_eq!(sample_law(&law, 50, 77).unwrap(), sample_law(&law, 50, 77).unwrap());
        assert_ne!(sample_law(&law, 50, 77).unwrap(), sample_law(&law, 50, 78).unwrap());
    }
}
