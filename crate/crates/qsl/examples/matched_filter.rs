//! Score a template bank against one Bell record of a multi-mode modulated
//! Gaussian and compare with the exact scores.

use num_complex::Complex64;
use qsl::channels::{bell_sample, SqueezeParam};
use qsl::estimators::{matched_filter_scores, template_beta};
use qsl::signals::DisplacementLaw;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma: Vec<Complex64> = (0..4).map(|k| Complex64::from_polar(1.0, 0.7 * k as f64)).collect();
    let law = DisplacementLaw::ModulatedGaussian { sigma: 1.0, eps0: 0.25, gamma: gamma.clone() };
    let r = SqueezeParam::new(0.5 * 4f64.ln())?;
    let rec = bell_sample(&law, r, 20_000, 3)?;

    // w = −2i·γ at t = 1 points the template at the hidden bump.
    let hidden: Vec<Complex64> = gamma.iter().map(|g| -2.0 * Complex64::i() * g).collect();
    let flat = vec![Complex64::new(0.5, 0.0); 4];
    let templates = vec![(hidden, 1.0), (flat, 1.0), (vec![Complex64::new(0.0, 0.0); 4], 1.0)];
    for ((w, t), s) in templates.iter().zip(matched_filter_scores(&rec, &templates)?) {
        let exact = law.char_func(&template_beta(w, *t))?;
        println!("score {:.4} ± {:.4}, exact {:.4}", s.value, s.stderr, exact);
    }
    Ok(())
}
