//! Numerical counterparts of the analytic estimates: Hölder quotients,
//! the `L^p` gradient constant, and the Osgood envelope for twin runs.

mod holder;
mod uniqueness;

pub use holder::{holder_quotient, holder_quotient_pairs, holder_quotient_vector, sample_pairs, HolderEstimate};
pub use uniqueness::{
    growth_constant, osgood_envelope, uniqueness_report, Envelope, UniquenessExperiment, UniquenessReport,
};

use crate::elliptic::velocity_gradient_norm;
use crate::error::{LakeError, Result};
use crate::geometry::{ScalarField, VectorField};
use crate::numeric::weighted_lp;

/// Ratios `|grad v|_p / (p |b omega|_p)` over a sweep of `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFit {
    pub p: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio.
    pub constant: f64,
    /// Largest ratio over `p <= 8`.
    pub low_p_max: f64,
}

impl GradientFit {
    /// No upward trend: the full-sweep maximum stays within `factor` of the
    /// maximum over `p <= 8`.
    pub fn uniform(&self, factor: f64) -> bool {
        self.constant <= factor * self.low_p_max
    }
}

/// `max_p |grad v|_p / (p |source|_p)` with unweighted cell norms.
pub fn fit_gradient_constant(velocity: &VectorField, source: &ScalarField, p_list: &[f64]) -> Result<GradientFit> {
    if p_list.is_empty() || p_list.iter().any(|p| !(3.0..=64.0).contains(p)) {
        return Err(LakeError::Precondition("exponents must lie in [3, 64]".into()));
    }
    if !velocity.grid().same_layout(source.grid()) {
        return Err(LakeError::GridMismatch("velocity and source live on different grids".into()));
    }
    let grid = velocity.grid();
    let area = grid.cell_area();
    let grad = velocity_gradient_norm(velocity);
    let mut ratios = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let den = weighted_lp(source.values(), None, area, p);
        if den == 0.0 {
            return Err(LakeError::UndefinedRatio(format!("source has zero L^{p} norm")));
        }
        ratios.push(weighted_lp(&grad, None, area, p) / (p * den));
    }
    let constant = ratios.iter().cloned().fold(0.0, f64::max);
    let low_p_max = p_list
        .iter()
        .zip(&ratios)
        .filter(|(p, _)| **p <= 8.0)
        .map(|(_, r)| *r)
        .fold(0.0, f64::max);
    Ok(GradientFit { p: p_list.to_vec(), ratios, constant, low_p_max })
}
