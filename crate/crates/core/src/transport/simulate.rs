use crate::elliptic::{normal_trace_residual, StreamSolution};
use crate::error::Result;
use crate::geometry::{BoundaryChart, ScalarField, VectorField};
use crate::numeric::det_sum;
use crate::transport::{truncate, weighted_norm_offset, StepContext, TransportConfig, VorticityState};

/// Shore samples used for the normal-trace residual of each snapshot.
const TRACE_SAMPLES: usize = 128;

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub omega: ScalarField,
    pub psi: ScalarField,
    pub velocity: VectorField,
}

/// Monitored quantities at an output time. Norm arrays hold `p = 1, 2, 4, inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub time: f64,
    pub steps: usize,
    /// `sum b^eps omega h^2`
    pub mass: f64,
    pub max_abs: f64,
    pub norms_b: [f64; 4],
    pub norms_b_eps: [f64; 4],
    /// `|(b^eps)^(1/p) T_R(omega)|_p` for `p = 2, 4` when `R` is set.
    pub truncated: Option<[f64; 2]>,
    /// `|sqrt(b) v|_2^2`
    pub energy: f64,
    pub trace_residual: f64,
    pub cg_iterations: usize,
}

pub const NORM_EXPONENTS: [f64; 4] = [1.0, 2.0, 4.0, f64::INFINITY];

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub rows: Vec<DiagnosticRow>,
    pub steps: usize,
    /// Steps after which `max|omega|` exceeded `max|omega_0|` by more than
    /// `1e-10` (relative to `max(1, max|omega_0|)`).
    pub max_principle_violations: usize,
}

/// Resumable run; after a failure the last good state stays available.
pub struct Simulation {
    ctx: StepContext,
    config: TransportConfig,
    chart: BoundaryChart,
    state: VorticityState,
    trajectory: Trajectory,
    initial_max: f64,
    output_index: usize,
    current: Option<StreamSolution>,
}

impl Simulation {
    pub fn new(omega0: ScalarField, config: TransportConfig) -> Result<Self> {
        let grid = omega0.grid().clone();
        let ctx = StepContext::new(grid.clone(), &config)?;
        let state = VorticityState::new(omega0, config.viscosity)?;
        let chart = grid.chart()?;
        let initial_max = state.omega.max_abs();
        Ok(Self {
            ctx,
            config,
            chart,
            state,
            trajectory: Trajectory::default(),
            initial_max,
            output_index: 0,
            current: None,
        })
    }

    pub fn state(&self) -> &VorticityState {
        &self.state
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }

    fn output_time(&self, k: usize) -> f64 {
        (k as f64 * self.config.output_every).min(self.config.t_end)
    }

    fn record(&mut self, sol: &StreamSolution) -> Result<()> {
        let omega = &self.state.omega;
        let grid = omega.grid().clone();
        let eps = self.config.viscosity;
        let mut norms_b = [0.0; 4];
        let mut norms_b_eps = [0.0; 4];
        for (k, &p) in NORM_EXPONENTS.iter().enumerate() {
            norms_b[k] = weighted_norm_offset(omega, 0.0, p)?;
            norms_b_eps[k] = weighted_norm_offset(omega, eps, p)?;
        }
        let truncated = match self.config.truncation {
            Some(r) => {
                let t = truncate(omega, r)?;
                Some([weighted_norm_offset(&t, eps, 2.0)?, weighted_norm_offset(&t, eps, 4.0)?])
            }
            None => None,
        };
        let b_eps = self.ctx.b_eps();
        let w = omega.values();
        let mass = det_sum(grid.len(), |k| b_eps[k] * w[k]) * grid.cell_area();
        let v = sol.velocity.values();
        let depth = grid.depth();
        let energy = det_sum(grid.len(), |k| depth[k] * (v[k][0] * v[k][0] + v[k][1] * v[k][1])) * grid.cell_area();
        let trace_residual = normal_trace_residual(&sol.velocity, &self.chart, TRACE_SAMPLES)?;
        self.trajectory.rows.push(DiagnosticRow {
            time: self.state.time,
            steps: self.trajectory.steps,
            mass,
            max_abs: omega.max_abs(),
            norms_b,
            norms_b_eps,
            truncated,
            energy,
            trace_residual,
            cg_iterations: sol.iterations,
        });
        self.trajectory.snapshots.push(Snapshot {
            time: self.state.time,
            omega: omega.clone(),
            psi: sol.psi.clone(),
            velocity: sol.velocity.clone(),
        });
        Ok(())
    }

    /// Steps to `t_end`, recording at every output time.
    pub fn run(&mut self) -> Result<()> {
        let t_end = self.config.t_end;
        loop {
            let sol = match self.current.take() {
                Some(s) => s,
                None => self.ctx.solve_stream(&self.state.omega)?,
            };
            let target = self.output_time(self.output_index);
            if self.state.time >= target {
                self.record(&sol)?;
                self.output_index += 1;
                if self.state.time >= t_end {
                    return Ok(());
                }
            }
            let target = self.output_time(self.output_index);
            let (mut next, _info) = self.ctx.step_with(&self.state, &self.config, &sol, target - self.state.time)?;
            if next.time >= target - 1e-12 * t_end.max(1.0) {
                next.time = target;
            }
            self.state = next;
            self.trajectory.steps += 1;
            let slack = 1e-10 * self.initial_max.max(1.0);
            if self.state.omega.max_abs() > self.initial_max + slack {
                self.trajectory.max_principle_violations += 1;
            }
            self.current = Some(self.ctx.solve_stream(&self.state.omega)?);
        }
    }
}

/// Runs `omega0` to `config.t_end`.
pub fn simulate(omega0: &ScalarField, config: &TransportConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(omega0.clone(), config.clone())?;
    sim.run()?;
    Ok(sim.into_trajectory())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DefiningFunction, DepthProfile, Grid};
    use std::sync::Arc;

    fn disk(h: f64) -> Arc<Grid> {
        Arc::new(build_grid(&DepthProfile::new(DefiningFunction::unit_disk(), 1.0).unwrap(), h).unwrap())
    }

    #[test]
    fn zero_vorticity_stays_zero() {
        let g = disk(1.0 / 16.0);
        let cfg = TransportConfig { t_end: 0.5, output_every: 0.25, ..Default::default() };
        let tr = simulate(&ScalarField::zeros(g), &cfg).unwrap();
        assert_eq!(tr.rows.len(), 3);
        for r in &tr.rows {
            assert_eq!(r.max_abs, 0.0);
            assert_eq!(r.energy, 0.0);
        }
        assert_eq!(tr.rows.last().unwrap().time, 0.5);
    }

    #[test]
    fn radial_vorticity_is_nearly_steady_and_improves_with_h() {
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let g = disk(h);
            let w0 = ScalarField::from_fn(g.clone(), |c| (1.0 - c[0] * c[0] - c[1] * c[1]).powi(2));
            let cfg = TransportConfig { t_end: 0.5, output_every: 0.5, ..Default::default() };
            let tr = simulate(&w0, &cfg).unwrap();
            let last = &tr.snapshots.last().unwrap().omega;
            let e = last.values().iter().zip(w0.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[1] < errs[0], "{errs:?}");
    }

    #[test]
    fn output_times_are_hit_exactly() {
        let g = disk(1.0 / 16.0);
        let w0 = ScalarField::from_fn(g, |c| c[0]);
        let cfg = TransportConfig { t_end: 0.3, output_every: 0.1, ..Default::default() };
        let tr = simulate(&w0, &cfg).unwrap();
        let times: Vec<f64> = tr.rows.iter().map(|r| r.time).collect();
        assert_eq!(times.len(), 4);
        for (t, e) in times.iter().zip([0.0, 0.1, 0.2, 0.3]) {
            assert!((t - e).abs() < 1e-15, "{times:?}");
        }
        assert_eq!(tr.max_principle_violations, 0);
    }

    #[test]
    fn viscous_weighted_norms_decay() {
        let g = disk(1.0 / 32.0);
        let w0 = ScalarField::from_fn(g, |c| (4.0 * c[0]).sin() * (3.0 * c[1]).cos());
        let cfg = TransportConfig {
            t_end: 0.2,
            output_every: 0.05,
            viscosity: 1e-2,
            truncation: Some(0.5),
            ..Default::default()
        };
        let tr = simulate(&w0, &cfg).unwrap();
        for w in tr.rows.windows(2) {
            for k in 0..4 {
                assert!(w[1].norms_b_eps[k] <= w[0].norms_b_eps[k] * (1.0 + 1e-12));
            }
        }
        assert!(tr.rows[0].truncated.is_some());
    }
}
