//! Relative-tolerance quadrature on top of double-exponential (tanh-sinh)
//! rules. Endpoint singularities of algebraic type are handled by the rule
//! itself; interior features need breakpoints from the caller. Pieces whose
//! error estimate misses their share of the budget are bisected.

use crate::error::{LakeError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

const MAX_DEPTH: u32 = 24;

/// `int_a^b f` to relative accuracy `rel_tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<QuadResult> {
    integrate_pieces(f, &[a, b], rel_tol, 0.0)
}

/// Sum over consecutive breakpoint intervals.
pub fn integrate_pieces(
    f: impl Fn(f64) -> f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_floor: f64,
) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    // magnitude estimate from the first tanh-sinh levels
    let coarse: f64 = breaks
        .windows(2)
        .map(|w| quadrature::integrate(&f, w[0], w[1], f64::MAX).integral.abs())
        .sum();
    let budget = (rel_tol * coarse).max(abs_floor);
    if budget == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let total_len = (breaks[breaks.len() - 1] - breaks[0]).abs();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let share = budget * ((w[1] - w[0]).abs() / total_len).max(1.0 / breaks.len() as f64);
        let r = adaptive(&f, w[0], w[1], share, 0);
        value += r.value;
        error += r.error;
    }
    if !(value.is_finite()) || error > 4.0 * budget {
        return Err(LakeError::Quadrature { estimate: value, error });
    }
    Ok(QuadResult { value, error })
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, target: f64, depth: u32) -> QuadResult {
    let out = quadrature::integrate(f, a, b, target);
    if out.error_estimate <= target || depth >= MAX_DEPTH {
        return QuadResult { value: out.integral, error: out.error_estimate };
    }
    let m = 0.5 * (a + b);
    let l = adaptive(f, a, m, 0.5 * target, depth + 1);
    let r = adaptive(f, m, b, 0.5 * target, depth + 1);
    QuadResult { value: l.value + r.value, error: l.error + r.error }
}

/// Breakpoints `lo, lo*r, lo*r^2, ... , hi` (plus `hi`), for integrands with
/// a scale-free feature near `lo > 0`.
pub fn geometric_breaks(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    let mut v = vec![lo];
    let mut x = lo * ratio;
    while x < hi {
        v.push(x);
        x *= ratio;
    }
    v.push(hi);
    v
}
