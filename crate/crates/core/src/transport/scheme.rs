use std::sync::Arc;

use rayon::prelude::*;

use crate::elliptic::{solve_with, SolveOptions, StreamSolution, WeightedOperator, WeightedPoissonProblem};
use crate::error::{LakeError, Result};
use crate::geometry::{DepthLaw, Grid, ScalarField, EAST, NORTH, SOUTH, WEST};
use crate::transport::{EllipticWeight, TransportConfig, VorticityState};

/// What one step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub cg_iterations: usize,
}

/// Per-grid state reused across steps: the assembled elliptic operator,
/// cell-mean `b^eps`, and the previous stream function for warm starts.
pub struct StepContext {
    grid: Arc<Grid>,
    op: WeightedOperator,
    viscosity: f64,
    b_eps: Vec<f64>,
    ghost_b_eps: f64,
    solve_tol: f64,
    last_psi: Option<Vec<f64>>,
}

impl StepContext {
    pub fn new(grid: Arc<Grid>, config: &TransportConfig) -> Result<Self> {
        config.validate()?;
        let eps = config.viscosity;
        let offset = match config.elliptic_weight {
            EllipticWeight::Depth => 0.0,
            EllipticWeight::RegularizedDepth => eps,
        };
        let op = WeightedOperator::assemble(grid.clone(), offset)?;
        let b_eps = grid.mean_depth().iter().map(|b| b + eps).collect();
        let ghost_b = match grid.profile().law() {
            DepthLaw::Power => 0.0,
            DepthLaw::Unit => 1.0,
        };
        Ok(Self {
            grid,
            op,
            viscosity: eps,
            b_eps,
            ghost_b_eps: ghost_b + eps,
            solve_tol: config.solve_tol,
            last_psi: None,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Cell-mean `b + eps`, the weight of the conserved variable.
    pub fn b_eps(&self) -> &[f64] {
        &self.b_eps
    }

    /// Stream function for `-div((1/b) grad Psi) = b^eps omega`.
    pub fn solve_stream(&mut self, omega: &ScalarField) -> Result<StreamSolution> {
        if !omega.grid().same_layout(&self.grid) {
            return Err(LakeError::GridMismatch("vorticity lives on a different grid".into()));
        }
        let rhs: Vec<f64> = omega.values().iter().zip(&self.b_eps).map(|(w, b)| -b * w).collect();
        let problem = WeightedPoissonProblem::new(ScalarField::new(self.grid.clone(), rhs))?;
        let opts = SolveOptions {
            tol: self.solve_tol,
            initial_guess: self.last_psi.clone(),
            ..SolveOptions::default()
        };
        let sol = solve_with(&self.op, &problem, &opts)?;
        self.last_psi = Some(sol.psi.values().to_vec());
        Ok(sol)
    }

    /// `Psi` at cell corners: mean of the four adjacent cells when all are
    /// wet, else 0. Corner `(i, j)` is the lower-left corner of cell `(i, j)`.
    fn corner_psi(&self, psi: &[f64]) -> (Vec<f64>, usize) {
        let (nx, ny) = self.grid.dims();
        let w = nx + 1;
        let vals = (0..(nx + 1) * (ny + 1))
            .into_par_iter()
            .map(|c| {
                let (i, j) = ((c % w) as i64, (c / w) as i64);
                let cells = [
                    self.grid.index_of(i - 1, j - 1),
                    self.grid.index_of(i, j - 1),
                    self.grid.index_of(i - 1, j),
                    self.grid.index_of(i, j),
                ];
                if cells.iter().all(Option::is_some) {
                    0.25 * cells.iter().map(|k| psi[k.unwrap()]).sum::<f64>()
                } else {
                    0.0
                }
            })
            .collect();
        (vals, w)
    }

    /// Outward face fluxes `int (b v) . n ds` in slot order east, west,
    /// north, south. Shared faces get exactly opposite values.
    fn face_fluxes(&self, psi: &[f64]) -> Vec<[f64; 4]> {
        let (corner, w) = self.corner_psi(psi);
        let c = |i: usize, j: usize| corner[j * w + i];
        self.grid
            .cells()
            .par_iter()
            .map(|&(i, j)| {
                let mut u = [0.0; 4];
                u[EAST] = c(i + 1, j + 1) - c(i + 1, j);
                u[WEST] = -(c(i, j + 1) - c(i, j));
                u[NORTH] = -(c(i + 1, j + 1) - c(i, j + 1));
                u[SOUTH] = c(i + 1, j) - c(i, j);
                u
            })
            .collect()
    }

    /// Face value of `b^eps`, symmetric in the two cells.
    fn face_b(&self, p: usize, n: Option<usize>) -> f64 {
        match n {
            Some(q) => 0.5 * (self.b_eps[p] + self.b_eps[q]),
            None => 0.5 * (self.b_eps[p] + self.ghost_b_eps),
        }
    }

    /// Largest step keeping every update coefficient nonnegative,
    /// `min_P b^eps_P h^2 / (outflow_P + eps sum_f c_f b_f)` with `c_f = 2`
    /// on shore faces, intersected with `h / max|v|` and
    /// `h^2 / (4 eps max b^eps)`.
    pub fn stable_dt(&self, fluxes: &[[f64; 4]], sol: &StreamSolution, cfl: f64) -> f64 {
        let h = self.grid.h();
        let h2 = self.grid.cell_area();
        let eps = self.viscosity;
        let nb = self.grid.neighbors();
        let local = (0..self.grid.len())
            .into_par_iter()
            .map(|p| {
                let out: f64 = fluxes[p].iter().map(|u| u.max(0.0)).sum();
                let diff: f64 = if eps > 0.0 {
                    (0..4)
                        .map(|s| eps * self.face_b(p, nb[p][s]) * if nb[p][s].is_some() { 1.0 } else { 2.0 })
                        .sum()
                } else {
                    0.0
                };
                let rate = out + diff;
                if rate > 0.0 {
                    self.b_eps[p] * h2 / rate
                } else {
                    f64::INFINITY
                }
            })
            .reduce(|| f64::INFINITY, f64::min);
        let vmax = sol.velocity.max_norm();
        let adv = if vmax > 0.0 { h / vmax } else { f64::INFINITY };
        let bmax = self.b_eps.iter().cloned().fold(0.0, f64::max);
        let dif = if eps > 0.0 { h2 / (4.0 * eps * bmax) } else { f64::INFINITY };
        cfl * local.min(adv).min(dif)
    }

    /// Explicit update of `q = b^eps omega` with upwind advective fluxes and
    /// centered diffusive fluxes (`omega = 0` ghost on the shore when `eps > 0`).
    pub fn advance(&self, omega: &[f64], fluxes: &[[f64; 4]], dt: f64) -> Vec<f64> {
        let h2 = self.grid.cell_area();
        let eps = self.viscosity;
        let nb = self.grid.neighbors();
        (0..self.grid.len())
            .into_par_iter()
            .map(|p| {
                let mut net = 0.0;
                for s in 0..4 {
                    let u = fluxes[p][s];
                    let up = if u > 0.0 {
                        omega[p]
                    } else {
                        match nb[p][s] {
                            Some(q) => omega[q],
                            None => 0.0,
                        }
                    };
                    net -= u * up;
                    if eps > 0.0 {
                        let bf = self.face_b(p, nb[p][s]);
                        net += match nb[p][s] {
                            Some(q) => eps * bf * (omega[q] - omega[p]),
                            None => eps * bf * (-2.0 * omega[p]),
                        };
                    }
                }
                let q = self.b_eps[p] * omega[p] + dt / h2 * net;
                q / self.b_eps[p]
            })
            .collect()
    }

    /// One step of at most `max_dt`.
    pub fn step(
        &mut self,
        state: &VorticityState,
        config: &TransportConfig,
        max_dt: f64,
    ) -> Result<(VorticityState, StepInfo)> {
        let sol = self.solve_stream(&state.omega)?;
        self.step_with(state, config, &sol, max_dt)
    }

    /// One step with the stream function of `state` already solved.
    pub fn step_with(
        &self,
        state: &VorticityState,
        config: &TransportConfig,
        sol: &StreamSolution,
        max_dt: f64,
    ) -> Result<(VorticityState, StepInfo)> {
        let fluxes = self.face_fluxes(sol.psi.values());
        let dt = self.stable_dt(&fluxes, sol, config.cfl).min(max_dt);
        if !(dt >= config.min_dt_fraction * config.t_end.max(f64::MIN_POSITIVE)) || !dt.is_finite() {
            return Err(LakeError::StepUnderflow { time: state.time, dt });
        }
        let next = self.advance(state.omega.values(), &fluxes, dt);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(LakeError::StepUnderflow { time: state.time, dt });
        }
        Ok((
            VorticityState {
                omega: ScalarField::new(self.grid.clone(), next),
                time: state.time + dt,
                viscosity: state.viscosity,
            },
            StepInfo { dt, cg_iterations: sol.iterations },
        ))
    }

    #[cfg(test)]
    pub(crate) fn fluxes_for_test(&self, psi: &[f64]) -> Vec<[f64; 4]> {
        self.face_fluxes(psi)
    }
}

/// One step from `state` through a fresh context.
pub fn step(state: &VorticityState, config: &TransportConfig) -> Result<VorticityState> {
    let mut ctx = StepContext::new(state.omega.grid().clone(), config)?;
    let remaining = (config.t_end - state.time).max(0.0);
    Ok(ctx.step(state, config, if remaining > 0.0 { remaining } else { f64::INFINITY })?.0)
}
