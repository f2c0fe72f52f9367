//! Small numeric helpers shared by the estimators and the harness.

use serde::{Deserialize, Serialize};

/// z-value of a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accum {
    sum: f64,
    comp: f64,
}

impl Accum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut a = Accum::default();
    for x in xs {
        a.add(x);
    }
    a.value()
}

/// Sample mean and unbiased sample variance (0 for fewer than two values).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = sum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1.0);
    (m, v)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Error count over a number of trials with its Wilson 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub errors: u64,
    pub trials: u64,
    pub lo: f64,
    pub hi: f64,
}

impl Rate {
    pub fn new(errors: u64, trials: u64) -> Self {
        let (lo, hi) = wilson(errors, trials);
        Self { errors, trials, lo, hi }
    }

    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }
}

pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}
