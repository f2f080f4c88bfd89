//! Half-space model kernels for the degenerate operator
//! `-x_n Delta - (a+2) d_{x_n}`, their verification harness, and the
//! one-dimensional Hardy/Fuchsian machinery used near the shore.

mod calibrate;
mod fuchsian;
mod growth;
mod hardy;
mod identity;
mod model;
mod transform;

pub use calibrate::{approximate_identity_mass, calibrate_gamma, reference_mass, MassDomain};
pub use fuchsian::{indicial_root, solve_fuchsian_1d, FuchsianSolution};
pub use growth::{operator_norm_growth, GrowthKernel, GrowthReport};
pub use hardy::{hardy_i, hardy_j, Sampled1d};
pub use identity::{
    kernel_bound_report, ray_samples, verify_model_identity, BoundSample, IdentityReport, KernelBoundReport,
};
pub use model::{eval_a2, eval_e_eps, eval_f, eval_g_eps, source_prefactor, E_EPS_REL_TOL};
pub use transform::{frozen_transform, FrozenTransform};

use crate::error::{LakeError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub a: f64,
    pub n: usize,
    pub gamma: f64,
    pub eps: f64,
}

impl KernelParams {
    pub fn new(a: f64, n: usize, gamma: f64, eps: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(LakeError::Configuration(format!("depth exponent must be positive, got {a}")));
        }
        if n < 2 {
            return Err(LakeError::Configuration(format!("dimension must be >= 2, got {n}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(LakeError::Configuration(format!("gamma must be positive, got {gamma}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(LakeError::Configuration(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { a, n, gamma, eps })
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.a, self.n, gamma, self.eps)
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.a, self.n, self.gamma, eps)
    }
}

/// Point `(x', x_n)` of the closed upper half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpacePoint {
    pub tangential: Vec<f64>,
    pub normal: f64,
}

impl HalfSpacePoint {
    pub fn new(tangential: Vec<f64>, normal: f64) -> Result<Self> {
        if !(normal >= 0.0) || tangential.iter().any(|t| !t.is_finite()) || !normal.is_finite() {
            return Err(LakeError::Precondition(format!("half-space point needs finite x_n >= 0, got {normal}")));
        }
        Ok(Self { tangential, normal })
    }

    /// Two-dimensional point `(t, x_n)`.
    ///
    /// # Panics
    /// If `x_n < 0`.
    pub fn planar(t: f64, normal: f64) -> Self {
        assert!(normal >= 0.0, "x_n must be nonnegative");
        Self { tangential: vec![t], normal }
    }

    pub fn dim(&self) -> usize {
        self.tangential.len() + 1
    }

    /// Coordinate `k`, with `k = dim - 1` the normal one.
    pub fn coord(&self, k: usize) -> f64 {
        if k < self.tangential.len() {
            self.tangential[k]
        } else {
            self.normal
        }
    }

    /// Copy with coordinate `k` shifted by `d`. The normal coordinate may
    /// leave the half-space; kernels extend analytically across `x_n = 0`.
    pub(crate) fn shifted(&self, k: usize, d: f64) -> Self {
        let mut p = self.clone();
        if k < p.tangential.len() {
            p.tangential[k] += d;
        } else {
            p.normal += d;
        }
        p
    }

    pub fn tangential_distance_sq(&self, other: &Self) -> f64 {
        self.tangential.iter().zip(&other.tangential).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance_sq(&self, other: &Self) -> f64 {
        self.tangential_distance_sq(other) + (self.normal - other.normal).powi(2)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(KernelParams::new(1.0, 2, 1.0, 0.1).is_ok());
        assert!(KernelParams::new(0.0, 2, 1.0, 0.1).is_err());
        assert!(KernelParams::new(1.0, 1, 1.0, 0.1).is_err());
        assert!(KernelParams::new(1.0, 2, 0.0, 0.1).is_err());
        assert!(KernelParams::new(1.0, 2, 1.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, 2, 1.0, 0.0).is_err());
    }

    #[test]
    fn points_stay_in_the_half_space() {
        assert!(HalfSpacePoint::new(vec![0.0], -1e-3).is_err());
        assert!(HalfSpacePoint::new(vec![f64::NAN], 1.0).is_err());
        let p = HalfSpacePoint::new(vec![1.0, 2.0], 0.5).unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.coord(2), 0.5);
        assert_eq!(p.shifted(1, 1.0).coord(1), 3.0);
    }
}
