//! Deblurred characteristic-function estimates from one Bell record, the
//! weighted-norm shot bound, and a Fourier-mixture property.

use num_complex::Complex64;
use qsl::channels::{bell_sample, SqueezeParam};
use qsl::estimators::{estimate_char, estimate_fourier_kernel, kr_sample_bound, FourierTerm};
use qsl::signals::{Atom, DisplacementLaw};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let law = DisplacementLaw::DeltaMixture { atoms: vec![Atom::single(0.3, 0.1, 0.5), Atom::single(-0.2, 0.4, 0.5)] };
    let r = SqueezeParam::new(1.5)?;
    let rec = bell_sample(&law, r, 50_000, 7)?;

    for b in [0.5, 1.0, 2.0] {
        let beta = [Complex64::new(b, -0.5 * b)];
        let est = estimate_char(&rec, &beta)?;
        let exact = law.char_func(&beta)?;
        println!("β = {:.2}: estimate {:.4} ± {:.4}, exact {:.4}", beta[0], est.value, est.stderr, exact);
    }

    let terms = vec![
        FourierTerm { coeff: Complex64::new(0.5, 0.0), beta: vec![Complex64::new(1.0, 0.0)] },
        FourierTerm { coeff: Complex64::new(0.5, 0.0), beta: vec![Complex64::new(-1.0, 0.0)] },
    ];
    let est = estimate_fourier_kernel(&rec, &terms)?;
    println!("cosine property: {:.4} ± {:.4}", est.value.re, est.stderr);
    println!("shots for ε = 0.05, δ = 0.01: {}", kr_sample_bound(&terms, r, 0.05, 0.01)?);
    Ok(())
}
