//! Signed densities on a periodic square grid and the ghost construction
//! g = Π_θ (u_θ^⊥·∇)² φ, whose Fourier transform vanishes on every ray
//! t·u_θ, so all projections onto the angles in Θ are zero.

use super::LawError;
use crate::stats;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::io::Write;

/// Values on a res×res grid covering [−extent/2, extent/2)², row-major in y.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    pub extent: f64,
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(extent: f64, resolution: usize, values: Vec<f64>) -> Result<Self, LawError> {
        if !(extent > 0.0) || resolution < 2 {
            return Err(LawError::Grid("extent must be positive and resolution at least 2".into()));
        }
        if values.len() != resolution * resolution {
            return Err(LawError::Grid(format!("expected {} values, got {}", resolution * resolution, values.len())));
        }
        Ok(Self { extent, resolution, values })
    }

    pub fn from_fn(extent: f64, resolution: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let dx = extent / resolution as f64;
        let x0 = -extent / 2.0;
        let mut values = Vec::with_capacity(resolution * resolution);
        for iy in 0..resolution {
            for ix in 0..resolution {
                values.push(f(x0 + ix as f64 * dx, x0 + iy as f64 * dx));
            }
        }
        Self { extent, resolution, values }
    }

    /// Normalized isotropic Gaussian of standard deviation `width`, centered.
    pub fn gaussian_bump(extent: f64, resolution: usize, width: f64) -> Self {
        let norm = 1.0 / (2.0 * PI * width * width);
        Self::from_fn(extent, resolution, |x, y| norm * (-(x * x + y * y) / (2.0 * width * width)).exp())
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.resolution as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent / 2.0 + i as f64 * self.spacing()
    }

    pub fn total_mass(&self) -> f64 {
        let dx = self.spacing();
        stats::sum(self.values.iter().copied()) * dx * dx
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Convolution with a centered isotropic Gaussian (per-axis variance `var`).
    pub fn convolve_gaussian(&self, var: f64) -> Self {
        let mut spec = fft2(&self.values, self.resolution, false);
        let n = self.resolution;
        for iy in 0..n {
            let ky = wavenumber(iy, n, self.extent);
            for ix in 0..n {
                let kx = wavenumber(ix, n, self.extent);
                spec[iy * n + ix] *= (-0.5 * var * (kx * kx + ky * ky)).exp();
            }
        }
        self.with_values(ifft2_real(spec, n))
    }

    /// Marginal density of t = u_θ·(x, y), sampled on `resolution` points.
    ///
    /// Lattice directions (multiples of π/4) are summed exactly along grid
    /// lines, wrapping periodically. Other angles go through the Fourier
    /// slice ĝ(t·u_θ), evaluated by direct summation (O(res³)).
    pub fn projected_marginal(&self, theta: f64) -> Vec<f64> {
        let n = self.resolution;
        let dx = self.spacing();
        let th = theta.rem_euclid(PI);
        let near = |a: f64| (th - a).abs() < 1e-12 || (th - a - PI).abs() < 1e-12;
        let mut out = vec![stats::Accum::default(); n];
        let lattice: Option<(i64, i64, f64)> = if near(0.0) {
            Some((1, 0, dx))
        } else if near(FRAC_PI_2) {
            Some((0, 1, dx))
        } else if near(FRAC_PI_4) {
            Some((1, 1, SQRT_2 * dx))
        } else if near(3.0 * FRAC_PI_4) {
            Some((-1, 1, SQRT_2 * dx))
        } else {
            None
        };
        if let Some((a, b, scale)) = lattice {
            for iy in 0..n {
                for ix in 0..n {
                    let s = (a * ix as i64 + b * iy as i64).rem_euclid(n as i64) as usize;
                    out[s].add(self.values[iy * n + ix]);
                }
            }
            return out.iter().map(|s| s.value() * scale).collect();
        }
        let (su, cu) = theta.sin_cos();
        let slice: Vec<Complex64> = (0..n)
            .map(|m| {
                let t = wavenumber(m, n, self.extent);
                let mut re = stats::Accum::default();
                let mut im = stats::Accum::default();
                for iy in 0..n {
                    let y = self.coord(iy);
                    for ix in 0..n {
                        let v = self.values[iy * n + ix];
                        if v != 0.0 {
                            let (s, c) = (-t * (cu * self.coord(ix) + su * y)).sin_cos();
                            re.add(v * c);
                            im.add(v * s);
                        }
                    }
                }
                Complex64::new(re.value(), im.value()) * dx * dx
            })
            .collect();
        (0..n)
            .map(|j| {
                let s = self.coord(j);
                let v: Complex64 = (0..n)
                    .map(|m| slice[m] * Complex64::from_polar(1.0, wavenumber(m, n, self.extent) * s))
                    .sum();
                v.re / self.extent
            })
            .collect()
    }

    /// CSV with columns x, y, value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "value"])?;
        let n = self.resolution;
        for iy in 0..n {
            for ix in 0..n {
                wr.write_record([
                    format!("{:.16e}", self.coord(ix)),
                    format!("{:.16e}", self.coord(iy)),
                    format!("{:.16e}", self.values[iy * n + ix]),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { extent: self.extent, resolution: self.resolution, values }
    }
}

fn wavenumber(i: usize, n: usize, extent: f64) -> f64 {
    let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
    2.0 * PI * m / extent
}

fn fft2(values: &[f64], n: usize, inverse: bool) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft2_in_place(&mut data, n, inverse);
    data
}

fn fft2_in_place(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for ix in 0..n {
        for iy in 0..n {
            col[iy] = data[iy * n + ix];
        }
        fft.process(&mut col);
        for iy in 0..n {
            data[iy * n + ix] = col[iy];
        }
    }
}

fn ifft2_real(mut spec: Vec<Complex64>, n: usize) -> Vec<f64> {
    fft2_in_place(&mut spec, n, true);
    let scale = 1.0 / (n * n) as f64;
    spec.iter().map(|z| z.re * scale).collect()
}

/// Apply Π_θ (u_θ^⊥·∇)² to `bump` spectrally.
pub fn ghost_density(angles: &[f64], bump: &GridDensity) -> Result<GridDensity, LawError> {
    if angles.is_empty() {
        return Err(LawError::Grid("at least one angle required".into()));
    }
    let n = bump.resolution;
    let peak = bump.max_abs();
    if peak == 0.0 {
        return Err(LawError::Grid("bump is identically zero".into()));
    }
    let edge = (0..n)
        .flat_map(|i| [bump.values[i], bump.values[(n - 1) * n + i], bump.values[i * n], bump.values[i * n + n - 1]])
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if edge > 1e-12 * peak {
        return Err(LawError::Grid(format!("bump is not compactly supported inside the grid (edge/peak = {:.1e})", edge / peak)));
    }
    let mut spec = fft2(&bump.values, n, false);
    // Content near the Nyquist band means the bump is under-resolved and its
    // derivatives would alias.
    let band = 3 * n / 8;
    let (mut inner, mut outer) = (0.0f64, 0.0f64);
    for iy in 0..n {
        let my = if iy < n / 2 { iy } else { n - iy };
        for ix in 0..n {
            let mx = if ix < n / 2 { ix } else { n - ix };
            let a = spec[iy * n + ix].norm();
            if mx >= band || my >= band {
                outer = outer.max(a);
            } else {
                inner = inner.max(a);
            }
        }
    }
    if outer > 1e-10 * inner {
        return Err(LawError::Grid(format!(
            "grid too coarse for the bump bandwidth (Nyquist-band ratio {:.1e})",
            outer / inner
        )));
    }
    let dirs: Vec<(f64, f64)> = angles.iter().map(|t| (-t.sin(), t.cos())).collect();
    for iy in 0..n {
        let ky = wavenumber(iy, n, bump.extent);
        for ix in 0..n {
            let kx = wavenumber(ix, n, bump.extent);
            // (u⊥·∇)² ↦ −(u⊥·k)²
            let mult: f64 = dirs.iter().map(|(a, b)| -(a * kx + b * ky).powi(2)).product();
            spec[iy * n + ix] *= mult;
        }
    }
    Ok(bump.with_values(ifft2_real(spec, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn single_angle_kills_x_marginal() {
        let bump = GridDensity::gaussian_bump(16.0, 128, 0.7);
        let g = ghost_density(&[0.0], &bump).unwrap();
        assert!(max_abs(&g.projected_marginal(0.0)) <= 1e-8);
        // but the orthogonal marginal does not vanish
        assert!(max_abs(&g.projected_marginal(FRAC_PI_2)) > 1e-3);
    }

    #[test]
    fn zero_total_mass() {
        let bump = GridDensity::gaussian_bump(16.0, 128, 0.7);
        let g = ghost_density(&[0.0, FRAC_PI_2, FRAC_PI_4], &bump).unwrap();
        assert!(g.total_mass().abs() <= 1e-10);
        assert!(g.max_abs() > 1.0);
    }

    #[test]
    fn slice_marginal_matches_analytic() {
        let shifted = GridDensity::from_fn(16.0, 64, |x, y| (-((x - 0.5).powi(2) + y * y) / 2.0).exp() / (2.0 * PI));
        let theta = 0.3;
        let m = shifted.projected_marginal(theta);
        let mu = 0.5 * theta.cos();
        for (j, v) in m.iter().enumerate() {
            let t = shifted.coord(j);
            let want = (-(t - mu).powi(2) / 2.0).exp() / (2.0 * PI).sqrt();
            assert!((v - want).abs() < 1e-9, "t={t}: {v} vs {want}");
        }
    }

    #[test]
    fn generic_angle_ghost_vanishes() {
        let bump = GridDensity::gaussian_bump(16.0, 64, 1.0);
        let g = ghost_density(&[0.3], &bump).unwrap();
        assert!(max_abs(&g.projected_marginal(0.3)) < 1e-8);
        assert!(max_abs(&g.projected_marginal(1.2)) > 1e-4);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let bump = GridDensity::gaussian_bump(16.0, 32, 0.15);
        assert!(matches!(ghost_density(&[0.0], &bump), Err(LawError::Grid(_))));
    }

    #[test]
    fn wide_bump_is_rejected() {
        let bump = GridDensity::gaussian_bump(4.0, 64, 1.0);
        assert!(matches!(ghost_density(&[0.0], &bump), Err(LawError::Grid(_))));
    }

    #[test]
    fn convolution_keeps_marginals_zero() {
        let bump = GridDensity::gaussian_bump(16.0, 128, 0.7);
        let g = ghost_density(&[0.0, FRAC_PI_2], &bump).unwrap().convolve_gaussian(0.3);
        assert!(max_abs(&g.projected_marginal(0.0)) <= 1e-8);
        assert!(max_abs(&g.projected_marginal(FRAC_PI_2)) <= 1e-8);
    }

    #[test]
    fn csv_export() {
        let g = GridDensity::gaussian_bump(4.0, 4, 1.0);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("x,y,value\n"));
    }
}
