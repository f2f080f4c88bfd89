//! Fundamental solution of the model operator `-x_n Delta - (a+2) d_{x_n}`
//! on the half-space, its epsilon-truncation and the resulting source kernel.

use crate::error::{LakeError, Result};
use crate::kernels::{HalfSpacePoint, KernelParams};
use crate::quad::{geometric_breaks, integrate_pieces};

/// Relative accuracy of the theta-quadrature behind `E^eps`. Tight enough
/// that second differences with steps down to 1e-4 stay clean.
pub const E_EPS_REL_TOL: f64 = 1e-12;

/// `(|x'-y'|^2, x_n, y_n)`: everything the model kernels depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced {
    pub tangential_sq: f64,
    pub xn: f64,
    pub yn: f64,
}

impl Reduced {
    pub fn of(x: &HalfSpacePoint, y: &HalfSpacePoint) -> Self {
        Self { tangential_sq: x.tangential_distance_sq(y), xn: x.normal, yn: y.normal }
    }

    /// `theta D^2 + (1-theta) D_check^2 = |x-y|^2 + 4 (1-theta) x_n y_n`.
    pub fn a_squared(&self, theta: f64) -> f64 {
        let d2 = self.tangential_sq + (self.xn - self.yn).powi(2);
        let dc2 = self.tangential_sq + (self.xn + self.yn).powi(2);
        theta * d2 + (1.0 - theta) * dc2
    }
}

pub fn eval_a2(x: &HalfSpacePoint, y: &HalfSpacePoint, theta: f64) -> f64 {
    Reduced::of(x, y).a_squared(theta)
}

fn f_reduced(p: &KernelParams, r: Reduced, theta: f64) -> f64 {
    if r.yn == 0.0 {
        return 0.0;
    }
    let a = p.a;
    let a2 = r.a_squared(theta);
    let tt = theta * (1.0 - theta);
    if tt <= 0.0 {
        return 0.0;
    }
    p.gamma * r.yn.powf(a + 1.0) * a2.powf(-0.5 * (a + p.n as f64)) * tt.powf(0.5 * a)
}

/// `F = gamma y_n^(a+1) A^-(a+n) (theta (1-theta))^(a/2)`.
pub fn eval_f(p: &KernelParams, x: &HalfSpacePoint, y: &HalfSpacePoint, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(LakeError::Precondition(format!("theta must lie in [0, 1], got {theta}")));
    }
    let r = Reduced::of(x, y);
    if r.yn > 0.0 && r.a_squared(theta) == 0.0 && theta > 0.0 && theta < 1.0 {
        return Err(LakeError::Singularity("A vanishes at x = y".into()));
    }
    Ok(f_reduced(p, r, theta))
}

/// Theta breakpoints: `[0, 1/2]` plus geometric refinement of `u = 1 - theta`
/// towards the truncation `u = eps`, where the integrand peaks for close pairs.
fn theta_breaks(eps: f64) -> Vec<f64> {
    let upper = 1.0 - eps;
    if upper <= 0.5 {
        return vec![0.0, upper];
    }
    let mut br = vec![0.0];
    br.extend(geometric_breaks(eps, 0.5, 4.0).iter().rev().map(|u| 1.0 - u));
    br
}

pub fn e_eps_reduced(p: &KernelParams, r: Reduced, rel_tol: f64) -> Result<f64> {
    if r.yn == 0.0 {
        return Ok(0.0);
    }
    let br = theta_breaks(p.eps);
    Ok(integrate_pieces(|t| f_reduced(p, r, t), &br, rel_tol, 0.0)?.value)
}

/// `E^eps(x, y) = int_0^(1-eps) F(x, y, theta) dtheta`.
pub fn eval_e_eps(p: &KernelParams, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    e_eps_reduced(p, Reduced::of(x, y), E_EPS_REL_TOL)
}

/// Prefactor of the source kernel. `L E^eps = G^eps` holds exactly with
/// `2 (n + a)`: differentiating `F` gives
/// `L F = 2 (n + a) gamma d_theta[y_n^(a+2) A^-(a+n+2) (theta(1-theta))^((a+2)/2)]`.
pub fn source_prefactor(a: f64, n: usize) -> f64 {
    2.0 * (n as f64 + a)
}

pub fn g_eps_reduced(p: &KernelParams, r: Reduced) -> f64 {
    if r.yn == 0.0 {
        return 0.0;
    }
    let a = p.a;
    let n = p.n as f64;
    let a2 = r.a_squared(1.0 - p.eps);
    source_prefactor(a, p.n)
        * p.gamma
        * r.yn.powf(a + 2.0)
        * a2.powf(-0.5 * (a + 2.0 + n))
        * (p.eps * (1.0 - p.eps)).powf(0.5 * (a + 2.0))
}

/// `G^eps` with `A` taken at `theta = 1 - eps`, i.e.
/// `A^2 = |x-y|^2 + 4 eps x_n y_n`.
pub fn eval_g_eps(p: &KernelParams, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    g_eps_reduced(p, Reduced::of(x, y))
}
