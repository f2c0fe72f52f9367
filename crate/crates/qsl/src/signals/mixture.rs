use super::{waveform::WAVEFORM_SCALE, ComplexAmp, Cov2, DisplacementLaw};

/// One weighted Gaussian component of a single-mode law (a point mass has
/// zero covariance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: ComplexAmp,
    pub cov: Cov2,
}

impl Component {
    /// Mean and variance of the projection √2·Re(e^{−iθ}α).
    pub fn projected(&self, theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        let m = std::f64::consts::SQRT_2 * (c * self.mean.re + s * self.mean.im);
        (m, 2.0 * self.cov.quad([c, s]))
    }

    fn scaled(&self, f: ComplexAmp) -> Component {
        // (x, p) ↦ A(x, p) with A = [[a, −b], [b, a]]; A Σ Aᵀ
        let (a, b) = (f.re, f.im);
        let s = &self.cov;
        let xx = a * a * s.sigma_x2 - 2.0 * a * b * s.c + b * b * s.sigma_p2;
        let pp = b * b * s.sigma_x2 + 2.0 * a * b * s.c + a * a * s.sigma_p2;
        let xp = a * b * (s.sigma_x2 - s.sigma_p2) + (a * a - b * b) * s.c;
        Component { weight: self.weight, mean: f * self.mean, cov: Cov2::new(xx, pp, xp) }
    }
}

pub(super) fn components(law: &DisplacementLaw) -> Option<Vec<Component>> {
    if law.n_modes() != 1 {
        return None;
    }
    match law {
        DisplacementLaw::GaussianCentered { cov } => {
            Some(vec![Component { weight: 1.0, mean: ComplexAmp::new(0.0, 0.0), cov: *cov }])
        }
        DisplacementLaw::DeltaMixture { atoms } => Some(
            atoms
                .iter()
                .map(|a| Component { weight: a.weight, mean: a.point[0], cov: Cov2::ZERO })
                .collect(),
        ),
        DisplacementLaw::ParityKicks { n, kick, constrained } => {
            // X = kick·(n − 2m) for m minus signs; constrained keeps even m
            let n = *n as usize;
            let mut binom = vec![1.0f64; n + 1];
            for m in 1..=n {
                binom[m] = binom[m - 1] * (n - m + 1) as f64 / m as f64;
            }
            let total = if *constrained { 2f64.powi(n as i32 - 1) } else { 2f64.powi(n as i32) };
            Some(
                (0..=n)
                    .filter(|m| !*constrained || m % 2 == 0)
                    .map(|m| Component {
                        weight: binom[m] / total,
                        mean: ComplexAmp::new(kick * (n as f64 - 2.0 * m as f64) * std::f64::consts::FRAC_1_SQRT_2, 0.0),
                        cov: Cov2::ZERO,
                    })
                    .collect(),
            )
        }
        DisplacementLaw::RotatedBeacon { beta, theta } => Some(vec![Component {
            weight: 1.0,
            mean: ComplexAmp::from_polar(1.0, *theta) * beta,
            cov: Cov2::ZERO,
        }]),
        DisplacementLaw::WaveformSinusoid { prior, .. } => {
            Some(components(prior)?.iter().map(|c| c.scaled(WAVEFORM_SCALE)).collect())
        }
        DisplacementLaw::Scaled { base, factor } => Some(components(base)?.iter().map(|c| c.scaled(*factor)).collect()),
        DisplacementLaw::Blurred { base, extra } => Some(
            components(base)?
                .iter()
                .map(|c| Component { cov: c.cov.add(extra), ..*c })
                .collect(),
        ),
        DisplacementLaw::ModulatedGaussian { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn mixture_char(comps: &[Component], beta: ComplexAmp) -> Complex64 {
        comps
            .iter()
            .map(|c| {
                let phase = super::super::pairing(&[c.mean], &[beta]);
                c.weight * super::super::gaussian_factor(&c.cov, beta) * (Complex64::i() * phase).exp()
            })
            .sum()
    }

    #[test]
    fn components_reproduce_char_func() {
        let laws = vec![
            DisplacementLaw::gaussian(0.4, 0.2, 0.1),
            DisplacementLaw::ParityKicks { n: 6, kick: 0.4, constrained: true },
            DisplacementLaw::ParityKicks { n: 5, kick: 0.4, constrained: false },
            DisplacementLaw::Scaled {
                base: Box::new(DisplacementLaw::gaussian(0.4, 0.2, 0.1)),
                factor: ComplexAmp::new(0.3, -1.1),
            },
            DisplacementLaw::Blurred {
                base: Box::new(DisplacementLaw::RotatedBeacon { beta: ComplexAmp::new(1.0, 0.5), theta: 0.2 }),
                extra: Cov2::new(0.1, 0.3, -0.05),
            },
        ];
        for law in laws {
            let comps = law.components().unwrap();
            let w: f64 = comps.iter().map(|c| c.weight).sum();
            assert!((w - 1.0).abs() < 1e-12);
            for beta in [ComplexAmp::new(0.3, 0.9), ComplexAmp::new(-1.2, 0.4)] {
                let a = law.char_func(&[beta]).unwrap();
                let b = mixture_char(&comps, beta);
                assert!((a - b).norm() < 1e-12, "{law:?}: {a} vs {b}");
            }
        }
    }
}
