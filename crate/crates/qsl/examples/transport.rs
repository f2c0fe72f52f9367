//! Transport distances, the Pinsker and Le Cam floors, and an ambiguity
//! bracket for Gaussians seen through two homodyne angles.

use qsl::ot::{
    ambiguity_modulus, kl_gaussian_variance, pinsker, testing_error_floor, w1_discrete, w2_gaussian, ModulusFamily,
    ModulusMeasurement, PlanarAtom,
};
use qsl::signals::Cov2;
use std::f64::consts::FRAC_PI_2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = 0.35;
    let p = [PlanarAtom::new(a, a, 0.5), PlanarAtom::new(-a, -a, 0.5)];
    let q = [PlanarAtom::new(a, -a, 0.5), PlanarAtom::new(-a, a, 0.5)];
    println!("XOR pair W1 = {:.4}", w1_discrete(&p, &q)?);

    let w2 = w2_gaussian([0.0; 2], &Cov2::new(1.0, 1.0, 0.6), [0.0; 2], &Cov2::new(1.0, 1.0, -0.6))?;
    println!("hiding pair W2 = {w2:.6}");

    let (v0, eps) = (0.2, 0.005);
    let n = v0 * v0 / (64.0 * eps * eps);
    let tv = pinsker(n * kl_gaussian_variance(v0, v0 + 2.0 * eps)?);
    println!("N = {n:.0}: TV ≤ {tv:.4}, any test errs with probability ≥ {:.4}", testing_error_floor(tv));

    let family = ModulusFamily::GaussianGrid { sigma_x2: vec![0.8, 1.0, 1.2], sigma_p2: vec![0.8, 1.0, 1.2], c: vec![-0.6, 0.0, 0.6] };
    let meas = ModulusMeasurement { angles: vec![0.0, FRAC_PI_2], r: 1.0 };
    let br = ambiguity_modulus(&family, &meas, 0.05, 2000)?;
    println!("modulus at η = {}: [{:.4}, {:.4}]", br.eta, br.lower, br.upper);
    Ok(())
}
