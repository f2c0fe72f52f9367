use super::{invalid, run_calibrated, Calibration, HarnessError, TestSpec};
use crate::stats::Rate;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    /// A point passes when the Wilson upper bound of its max error is at most this.
    pub target_error: f64,
    pub trials: u64,
    pub n_lo: u64,
    pub n_hi: u64,
    /// Bisection stops once the band is narrower than this fraction of N.
    pub rel_tol: f64,
    pub max_evals: u32,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { target_error: 0.1, trials: 400, n_lo: 1, n_hi: 1 << 20, rel_tol: 0.05, max_evals: 48 }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.target_error > 0.0 && self.target_error < 0.5) {
            return Err(invalid("target_error", "must lie in (0, 0.5)"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.n_lo == 0 || self.n_lo > self.n_hi {
            return Err(invalid("bracket", format!("need 1 ≤ N_lo ≤ N_hi, got ({}, {})", self.n_lo, self.n_hi)));
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(invalid("rel_tol", "must be finite and nonnegative"));
        }
        if self.max_evals == 0 {
            return Err(invalid("max_evals", "must be at least 1"));
        }
        Ok(())
    }
}

/// Result of the N search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NStar {
    /// Smallest passing N found.
    pub n_star: u64,
    /// Error at `n_star`.
    pub rate: Rate,
    /// Largest N seen to fail (0 when `n_lo` already passes).
    pub n_fail: u64,
    /// False when the evaluation budget ran out before the band closed.
    pub resolved: bool,
    pub evaluations: u32,
}

impl NStar {
    /// (last failing N, first passing N).
    pub fn band(&self) -> (u64, u64) {
        (self.n_fail, self.n_star)
    }
}

/// Doubling from `n_lo` until a pass, then bisection between the last fail
/// and the first pass.
pub fn empirical_sample_complexity(spec: &TestSpec, opts: &SearchOptions, seed: u64) -> Result<NStar, HarnessError> {
    opts.validate()?;
    let cal = Calibration::new(spec)?;
    if cal.indistinguishable() {
        return Err(HarnessError::BracketExhausted { n_hi: opts.n_hi, rate: None });
    }
    let evals = std::cell::Cell::new(0u32);
    let eval = |n: u64| -> Result<(bool, Rate), HarnessError> {
        evals.set(evals.get() + 1);
        let r = run_calibrated(spec, &cal, n, opts.trials, seed)?.max;
        Ok((r.hi <= opts.target_error, r))
    };
    let mut n = opts.n_lo;
    let mut fail = 0u64;
    let mut pass_rate = loop {
        let (ok, rate) = eval(n)?;
        if ok {
            break rate;
        }
        if n >= opts.n_hi {
            return Err(HarnessError::BracketExhausted { n_hi: opts.n_hi, rate: Some(rate) });
        }
        fail = n;
        n = n.saturating_mul(2).min(opts.n_hi);
    };
    let mut pass = n;
    let closed = |lo: u64, hi: u64| hi - lo <= 1 || (hi - lo) as f64 <= opts.rel_tol * hi as f64;
    while fail > 0 && !closed(fail, pass) && evals.get() < opts.max_evals {
        let mid = fail + (pass - fail) / 2;
        let (ok, rate) = eval(mid)?;
        if ok {
            pass = mid;
            pass_rate = rate;
        } else {
            fail = mid;
        }
    }
    Ok(NStar { n_star: pass, rate: pass_rate, n_fail: fail, resolved: fail == 0 || closed(fail, pass), evaluations: evals.get() })
}
