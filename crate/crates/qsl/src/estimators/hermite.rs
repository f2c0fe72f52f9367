//! Scaled probabilists' Hermite polynomials H_k^{(ν)}(t) = ν^{k/2}·He_k(t/√ν).
//!
//! If Z ~ N(0, ν) then E[H_k^{(ν)}(x + Z)] = x^k, which is what lets the
//! polynomial estimator undo the Bell blur moment by moment.

use super::EstimatorError;

pub const MAX_DEGREE: u32 = 8;

/// H_{k+1} = t·H_k − k·ν·H_{k−1}. No cap or sign checks.
pub(crate) fn scaled(k: u32, nu: f64, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = t * cur - j as f64 * nu * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn hermite_eval(k: u32, nu: f64, t: f64) -> Result<f64, EstimatorError> {
    if k > MAX_DEGREE {
        return Err(EstimatorError::DegreeCap(k));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(EstimatorError::Invalid { field: "nu".into(), reason: "must be positive and finite".into() });
    }
    Ok(scaled(k, nu, t))
}
