//! A signed density invisible to homodyne at three angles but not at a fourth.

use qsl::signals::{ghost_density, GridDensity};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let angles = [0.0, FRAC_PI_2, FRAC_PI_4];
    let g = ghost_density(&angles, &GridDensity::gaussian_bump(16.0, 256, 0.7))?;
    let max_abs = |v: Vec<f64>| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for theta in [0.0, FRAC_PI_4, FRAC_PI_2, 0.4] {
        println!("θ = {theta:.3}: max |marginal| = {:.2e}", max_abs(g.projected_marginal(theta)));
    }
    println!("total mass {:.2e}, peak {:.3}", g.total_mass(), g.max_abs());
    Ok(())
}
