//! Draw one law through the three readouts and compare the per-quadrature
//! sample variance with the law's variance plus the channel noise.

use qsl::channels::{bell_sample, heterodyne_sample, homodyne_sample, SqueezeParam};
use qsl::signals::DisplacementLaw;
use qsl::stats::mean_var;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let law = DisplacementLaw::gaussian(0.05, 0.05, 0.02);
    let r = SqueezeParam::new(1.0)?;
    let n = 200_000;

    for (name, rec) in [("bell", bell_sample(&law, r, n, 1)?), ("heterodyne", heterodyne_sample(&law, n, 2)?)] {
        let re: Vec<f64> = rec.complex().unwrap().iter().map(|z| z.re).collect();
        let (_, v) = mean_var(&re);
        println!("{name:>10}: Var(Re ζ) = {v:.4}");
    }
    println!("expected: bell {:.4}, heterodyne {:.4}", 0.05 + r.nu(), 0.05 + 0.5);

    let rec = homodyne_sample(&law, 0.0, r, n, 3)?;
    let (_, v) = mean_var(rec.real().unwrap());
    println!("  homodyne: Var(Y) = {v:.4} (expected {:.4})", 2.0 * 0.05 + r.nu());
    Ok(())
}
