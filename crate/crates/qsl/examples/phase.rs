//! Signed rotation of a beacon from Bell and heterodyne records.

use num_complex::Complex64;
use qsl::channels::{beacon_variance, bell_sample_with_noise, heterodyne_sample, SqueezeParam};
use qsl::estimators::estimate_phase;
use qsl::signals::DisplacementLaw;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let beta = Complex64::new(2.0, 0.0);
    let r = SqueezeParam::new(2.0)?;
    for theta in [-0.2, 0.05, 0.3] {
        let law = DisplacementLaw::RotatedBeacon { beta, theta };
        let bell = bell_sample_with_noise(&law, r, beacon_variance(r, theta), 200, 1)?;
        let het = heterodyne_sample(&law, 200, 2)?;
        let (b, h) = (estimate_phase(&bell, beta)?, estimate_phase(&het, beta)?);
        println!("θ = {theta:+.2}: bell {:+.4} ± {:.4}, heterodyne {:+.4} ± {:.4}", b.value.re, b.stderr, h.value.re, h.stderr);
    }
    Ok(())
}
