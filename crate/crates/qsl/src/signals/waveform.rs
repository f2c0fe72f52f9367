use super::{ComplexAmp, DisplacementLaw, LawError};

/// α_k = (π/√2)(B_k − i·A_k) = λ·(A_k + i·B_k) with λ = −iπ/√2.
pub const WAVEFORM_SCALE: ComplexAmp = ComplexAmp::new(0.0, -std::f64::consts::PI / std::f64::consts::SQRT_2);

/// Map sinusoid coefficients c_k = A_k + i·B_k to displacements.
pub fn waveform_map(coeffs: &[ComplexAmp]) -> Vec<ComplexAmp> {
    coeffs.iter().map(|c| WAVEFORM_SCALE * c).collect()
}

/// Pushforward of a coefficient prior (over c_k = A_k + i·B_k, one entry per
/// frequency) to a displacement law.
pub fn waveform_to_law(prior: DisplacementLaw, frequencies: Vec<f64>) -> Result<DisplacementLaw, LawError> {
    let law = DisplacementLaw::WaveformSinusoid { prior: Box::new(prior), frequencies };
    law.validate()?;
    Ok(law)
}

/// The coefficient prior whose pushforward is `law`.
pub fn coefficient_prior_for(law: DisplacementLaw) -> DisplacementLaw {
    DisplacementLaw::Scaled { base: Box::new(law), factor: WAVEFORM_SCALE.inv() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::sample_law;

    #[test]
    fn unit_cosine_amplitude() {
        let law = waveform_to_law(DisplacementLaw::point(ComplexAmp::new(1.0, 0.0)), vec![3.0]).unwrap();
        let d = sample_law(&law, 1, 0).unwrap();
        assert_eq!(d[0][0].re, 0.0);
        assert!((d[0][0].im + 2.221_441_469_079_183).abs() < 1e-15);
    }

    #[test]
    fn point_mass_is_bit_exact() {
        let coeffs = vec![ComplexAmp::new(0.7, -1.3), ComplexAmp::new(-0.2, 0.4)];
        let law = waveform_to_law(DisplacementLaw::point_multi(coeffs.clone()), vec![1.0, 2.0]).unwrap();
        let want = waveform_map(&coeffs);
        for d in sample_law(&law, 5, 3).unwrap() {
            assert_eq!(d, want);
        }
    }

    #[test]
    fn zero_coefficients() {
        let law = waveform_to_law(DisplacementLaw::point(ComplexAmp::new(0.0, 0.0)), vec![1.0]).unwrap();
        let d = sample_law(&law, 1, 0).unwrap();
        assert_eq!(d[0][0].norm(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let r = waveform_to_law(DisplacementLaw::point(ComplexAmp::new(1.0, 0.0)), vec![1.0, 2.0]);
        assert!(matches!(r, Err(LawError::Dimension { .. })));
    }

    #[test]
    fn pullback_char_func_matches() {
        let target = DisplacementLaw::ModulatedGaussian {
            sigma: 0.8,
            eps0: 0.2,
            gamma: vec![ComplexAmp::new(0.5, 0.5), ComplexAmp::new(-1.0, 0.2)],
        };
        let law = waveform_to_law(coefficient_prior_for(target.clone()), vec![1.0, 2.0]).unwrap();
        let beta = [ComplexAmp::new(0.3, -0.4), ComplexAmp::new(0.1, 0.9)];
        let a = law.char_func(&beta).unwrap();
        let b = target.char_func(&beta).unwrap();
        assert!((a - b).norm() < 1e-14);
    }
}
