use super::OtError;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson with Richardson correction; absolute tolerance `tol`.
pub fn adaptive_simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, OtError> {
    if b <= a {
        return Ok(0.0);
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&mut f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn step(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, OtError> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(OtError::NonConvergence(a, b));
    }
    if delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(OtError::NonConvergence(a, b));
    }
    Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)? + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_transcendental() {
        let v = adaptive_simpson(|x| x.powi(3), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn kinked_integrand() {
        let v = adaptive_simpson(|x: f64| (x - 0.3).abs(), -1.0, 1.0, 1e-10).unwrap();
        assert!((v - (0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7)).abs() < 1e-9);
    }

    #[test]
    fn nan_is_an_error() {
        assert!(adaptive_simpson(|_| f64::NAN, 0.0, 1.0, 1e-9).is_err());
    }
}
