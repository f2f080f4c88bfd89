use std::f64::consts::PI;

use crate::elliptic::{StreamSolution, WeightedPoissonProblem};
use crate::error::{LakeError, Result};
use crate::geometry::{BoundaryChart, DepthProfile, Grid, ScalarField, VectorField, EAST, NORTH, SOUTH, WEST};
use crate::numeric::weighted_lp;

/// One-sided at the mask edge, centered elsewhere.
fn grad_at(grid: &Grid, u: &[f64], p: usize) -> [f64; 2] {
    let nb = grid.neighbors()[p];
    let h = grid.h();
    let d = |plus: Option<usize>, minus: Option<usize>| match (plus, minus) {
        (Some(e), Some(w)) => (u[e] - u[w]) / (2.0 * h),
        (Some(e), None) => (u[e] - u[p]) / h,
        (None, Some(w)) => (u[p] - u[w]) / h,
        (None, None) => 0.0,
    };
    [d(nb[EAST], nb[WEST]), d(nb[NORTH], nb[SOUTH])]
}

/// `v = phi grad_h(Phi)^perp + (a+1) Phi grad(phi)^perp` with
/// `grad^perp u = (d_y u, -d_x u)`. Avoids the `0/0` of `(1/b) grad^perp Psi`
/// at the shore.
pub fn velocity_from_scaled(phi_scaled: &ScalarField) -> VectorField {
    let grid = phi_scaled.grid();
    let a1 = grid.exponent() + 1.0;
    let u = phi_scaled.values();
    let defining = grid.profile().defining();
    let vals = (0..grid.len())
        .map(|p| {
            let c = grid.centers()[p];
            let ph = grid.phi()[p];
            let gphi = defining.grad(c);
            let g = grad_at(grid, u, p);
            [ph * g[1] + a1 * u[p] * gphi[1], -(ph * g[0]) - a1 * u[p] * gphi[0]]
        })
        .collect();
    VectorField::new(grid.clone(), vals)
}

pub fn recover_velocity(sol: &StreamSolution, _profile: &DepthProfile) -> VectorField {
    velocity_from_scaled(&sol.phi_scaled)
}

/// `(1/b) grad_h^perp Psi`, the direct form; only meaningful away from the shore.
pub fn stream_velocity(psi: &ScalarField) -> VectorField {
    let grid = psi.grid();
    let vals = (0..grid.len())
        .map(|p| {
            let g = grad_at(grid, psi.values(), p);
            let b = grid.depth()[p];
            [g[1] / b, -g[0] / b]
        })
        .collect();
    VectorField::new(grid.clone(), vals)
}

/// Max over shore samples of `|v . n|`, where `v` at the shore is linearly
/// extrapolated along the inward normal from two collar points and `n` is
/// the outward normal.
pub fn normal_trace_residual(v: &VectorField, chart: &BoundaryChart, n_samples: usize) -> Result<f64> {
    let h = v.grid().h();
    let delta = chart.delta();
    let mut worst: f64 = 0.0;
    for k in 0..n_samples.max(1) {
        let xp = 2.0 * PI * k as f64 / n_samples.max(1) as f64;
        let nu = chart.normal(xp)?;
        let mut s1 = (2.0 * h).min(0.5 * delta);
        let mut found = None;
        while 2.0 * s1 <= delta + 1e-12 {
            let s2 = 2.0 * s1;
            let v1 = v.interpolate(chart.chart_point(xp, s1)?);
            let v2 = v.interpolate(chart.chart_point(xp, s2.min(delta))?);
            if let (Some(v1), Some(v2)) = (v1, v2) {
                found = Some([2.0 * v1[0] - v2[0], 2.0 * v1[1] - v2[1]]);
                break;
            }
            s1 += 0.5 * h;
        }
        let v0 = found.ok_or_else(|| {
            LakeError::Configuration(format!(
                "no interpolable collar points at boundary parameter {xp:.4}; widen the collar"
            ))
        })?;
        worst = worst.max((v0[0] * nu[0] + v0[1] * nu[1]).abs());
    }
    Ok(worst)
}

/// Pointwise Frobenius norm of `grad_h v`.
pub fn velocity_gradient_norm(v: &VectorField) -> Vec<f64> {
    let grid = v.grid();
    let c0: Vec<f64> = v.values().iter().map(|w| w[0]).collect();
    let c1: Vec<f64> = v.values().iter().map(|w| w[1]).collect();
    (0..grid.len())
        .map(|p| {
            let g0 = grad_at(grid, &c0, p);
            let g1 = grad_at(grid, &c1, p);
            (g0[0] * g0[0] + g0[1] * g0[1] + g1[0] * g1[0] + g1[1] * g1[1]).sqrt()
        })
        .collect()
}

/// `r(p) = (1/p) |grad v|_p / (|f|_p + |b v|_2)` with cell-sum norms.
pub fn lp_gradient_ratio(sol: &StreamSolution, problem: &WeightedPoissonProblem, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(LakeError::Precondition(format!("p must be >= 2, got {p}")));
    }
    let grid = sol.grid();
    let area = grid.cell_area();
    let grad = velocity_gradient_norm(&sol.velocity);
    let num = weighted_lp(&grad, None, area, p);
    let f_norm = weighted_lp(problem.rhs.values(), None, area, p);
    let bv: Vec<f64> = sol
        .velocity
        .values()
        .iter()
        .zip(grid.depth())
        .map(|(v, b)| b * v[0].hypot(v[1]))
        .collect();
    let bv_norm = weighted_lp(&bv, None, area, 2.0);
    let den = f_norm + bv_norm;
    if den == 0.0 {
        return Err(LakeError::UndefinedRatio("zero datum and zero velocity".into()));
    }
    Ok(num / (p * den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{solve, SolveOptions};
    use crate::geometry::{build_grid, DefiningFunction};
    use std::sync::Arc;

    fn disk_grid(a: f64, h: f64) -> Arc<Grid> {
        Arc::new(build_grid(&DepthProfile::new(DefiningFunction::unit_disk(), a).unwrap(), h).unwrap())
    }

    #[test]
    fn unit_scaled_potential_gives_rigid_rotation() {
        for a in [0.5, 1.0, 2.0] {
            let g = disk_grid(a, 1.0 / 32.0);
            let v = velocity_from_scaled(&ScalarField::from_fn(g.clone(), |_| 1.0));
            for (c, w) in g.centers().iter().zip(v.values()) {
                let e = [(a + 1.0) * -2.0 * c[1], (a + 1.0) * 2.0 * c[0]];
                assert!((w[0] - e[0]).abs() < 1e-13 && (w[1] - e[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_stream_function_has_zero_velocity() {
        let g = disk_grid(1.0, 1.0 / 16.0);
        let v = velocity_from_scaled(&ScalarField::zeros(g));
        assert_eq!(v.max_norm(), 0.0);
    }

    #[test]
    fn trace_of_rotation_and_constant_fields() {
        let g = disk_grid(1.0, 1.0 / 64.0);
        let chart = g.chart().unwrap();
        let rot = VectorField::from_fn(g.clone(), |c| [-4.0 * c[1], 4.0 * c[0]]);
        let r = normal_trace_residual(&rot, &chart, 256).unwrap();
        assert!(r < 1e-10, "rotation residual {r}");
        let cst = VectorField::from_fn(g.clone(), |_| [1.0, 0.0]);
        let r = normal_trace_residual(&cst, &chart, 256).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "constant residual {r}");
    }

    #[test]
    fn two_velocity_forms_agree_in_the_interior() {
        let mut errs = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let g = disk_grid(1.0, h);
            let prob = WeightedPoissonProblem::from_fn(g.clone(), |p| (2.0 * p[0]).cos() + p[1] - 3.0).unwrap();
            let sol = solve(&prob, &SolveOptions::default()).unwrap();
            let direct = stream_velocity(&sol.psi);
            let e = (0..g.len())
                .filter(|&k| g.phi()[k] > 0.2)
                .map(|k| {
                    let (u, w) = (direct.values()[k], sol.velocity.values()[k]);
                    (u[0] - w[0]).hypot(u[1] - w[1])
                })
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] < 0.2 && errs[1] < 0.6 * errs[0], "{errs:?}");
    }

    #[test]
    fn zero_data_ratio_is_undefined() {
        let g = disk_grid(1.0, 1.0 / 16.0);
        let prob = WeightedPoissonProblem::from_fn(g, |_| 0.0).unwrap();
        let sol = solve(&prob, &SolveOptions::default()).unwrap();
        assert!(matches!(lp_gradient_ratio(&sol, &prob, 4.0), Err(LakeError::UndefinedRatio(_))));
    }
}
