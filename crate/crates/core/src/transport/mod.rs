//! Finite-volume transport of potential vorticity with optional artificial
//! viscosity `eps div(b^eps grad omega)`, `b^eps = b + eps`, coupled to the
//! stream-function solve.

mod scheme;
mod simulate;

pub use scheme::{step, StepContext, StepInfo};
pub use simulate::{simulate, DiagnosticRow, Simulation, Snapshot, Trajectory, NORM_EXPONENTS};

use crate::error::{LakeError, Result};
use crate::geometry::ScalarField;
use crate::numeric::weighted_lp;

/// Weight in the elliptic solve: `1/b` as written, or `1/(b + eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EllipticWeight {
    #[default]
    Depth,
    RegularizedDepth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub viscosity: f64,
    /// Level `R` of the monitored truncation `T_R`.
    pub truncation: Option<f64>,
    /// Snapshot cadence; a snapshot is also taken at `t = 0` and `t_end`.
    pub output_every: f64,
    pub elliptic_weight: EllipticWeight,
    /// Relative residual for the per-step stream solves.
    pub solve_tol: f64,
    /// Steps shorter than `min_dt_fraction * t_end` abort the run.
    pub min_dt_fraction: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            t_end: 1.0,
            viscosity: 0.0,
            truncation: None,
            output_every: 0.1,
            elliptic_weight: EllipticWeight::Depth,
            solve_tol: 1e-10,
            min_dt_fraction: 1e-9,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LakeError::Configuration(m));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("end time must be finite and nonnegative, got {}", self.t_end));
        }
        if !(self.viscosity >= 0.0 && self.viscosity.is_finite()) {
            return bad(format!("viscosity must be nonnegative, got {}", self.viscosity));
        }
        if let Some(r) = self.truncation {
            if !(r > 0.0) {
                return bad(format!("truncation level must be positive, got {r}"));
            }
        }
        if !(self.output_every > 0.0) {
            return bad(format!("output cadence must be positive, got {}", self.output_every));
        }
        if !(self.solve_tol > 0.0) {
            return bad(format!("solver tolerance must be positive, got {}", self.solve_tol));
        }
        if !(self.min_dt_fraction > 0.0) {
            return bad(format!("minimum step fraction must be positive, got {}", self.min_dt_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VorticityState {
    pub omega: ScalarField,
    pub time: f64,
    pub viscosity: f64,
}

impl VorticityState {
    pub fn new(omega: ScalarField, viscosity: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(LakeError::Precondition("initial vorticity must be finite".into()));
        }
        Ok(Self { omega, time: 0.0, viscosity })
    }
}

/// Pointwise clamp to `[-R, R]`.
pub fn truncate(omega: &ScalarField, r: f64) -> Result<ScalarField> {
    if !(r > 0.0) {
        return Err(LakeError::Precondition(format!("truncation level must be positive, got {r}")));
    }
    let vals = omega.values().iter().map(|v| v.clamp(-r, r)).collect();
    Ok(ScalarField::new(omega.grid().clone(), vals))
}

/// `(sum b |omega|^p h^2)^(1/p)` with the cell-mean depth, or `max |omega|`
/// for `p = inf`.
pub fn weighted_norm(omega: &ScalarField, p: f64) -> Result<f64> {
    weighted_norm_offset(omega, 0.0, p)
}

/// As [`weighted_norm`] with weight `b + offset`.
pub fn weighted_norm_offset(omega: &ScalarField, offset: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LakeError::Precondition(format!("p must lie in [1, inf], got {p}")));
    }
    let grid = omega.grid();
    let w: Vec<f64> = grid.mean_depth().iter().map(|b| b + offset).collect();
    Ok(weighted_lp(omega.values(), Some(&w), grid.cell_area(), p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DefiningFunction, DepthProfile};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(h: f64) -> Arc<crate::geometry::Grid> {
        Arc::new(build_grid(&DepthProfile::new(DefiningFunction::unit_disk(), 1.0).unwrap(), h).unwrap())
    }

    #[test]
    fn truncation_clamps_and_is_idempotent() {
        let g = grid(1.0 / 16.0);
        let w = ScalarField::from_fn(g.clone(), |_| 5.0);
        let t = truncate(&w, 3.0).unwrap();
        assert!(t.values().iter().all(|v| *v == 3.0));
        let s = ScalarField::from_fn(g, |c| c[0] - c[1]);
        let t1 = truncate(&s, 10.0).unwrap();
        assert_eq!(t1.values(), s.values());
        let t2 = truncate(&truncate(&s, 0.3).unwrap(), 0.3).unwrap();
        assert_eq!(t2.values(), truncate(&s, 0.3).unwrap().values());
        assert!(truncate(&s, 0.0).is_err());
    }

    #[test]
    fn weighted_norm_of_one() {
        let g = grid(1.0 / 256.0);
        let one = ScalarField::from_fn(g.clone(), |_| 1.0);
        for p in [1.0, 2.0, 4.0] {
            let v = weighted_norm(&one, p).unwrap();
            let e = (PI / 2.0).powf(1.0 / p);
            assert!((v - e).abs() < 5e-3 * e, "p={p}: {v} vs {e}");
        }
        assert_eq!(weighted_norm(&one, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(weighted_norm(&ScalarField::zeros(g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn weighted_norm_is_homogeneous() {
        let g = grid(1.0 / 32.0);
        let w = ScalarField::from_fn(g, |c| (3.0 * c[0]).sin() + c[1]);
        for p in [1.0, 3.0, f64::INFINITY] {
            let a = weighted_norm(&w.scaled(-2.5), p).unwrap();
            let b = 2.5 * weighted_norm(&w, p).unwrap();
            assert!((a - b).abs() < 1e-13 * b);
        }
        assert!(weighted_norm(&w, 0.5).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TransportConfig::default().validate().is_ok());
        for c in [
            TransportConfig { cfl: 1.5, ..Default::default() },
            TransportConfig { cfl: 0.0, ..Default::default() },
            TransportConfig { viscosity: -1.0, ..Default::default() },
            TransportConfig { truncation: Some(0.0), ..Default::default() },
            TransportConfig { output_every: 0.0, ..Default::default() },
        ] {
            assert!(matches!(c.validate(), Err(LakeError::Configuration(_))));
        }
    }
}
