//! Degenerate weighted Poisson problem `div((1/b) grad Psi) = f`, `Psi = 0`
//! on the shore, solved as the minimizer of the discrete energy
//! `1/2 <(1/b) grad Psi, grad Psi> + <f, Psi>` by Jacobi-preconditioned CG.
//! The scaled potential `Phi = Psi / phi^(a+1)` and the velocity are
//! recovered afterwards.

mod operator;
mod velocity;

use std::sync::Arc;

pub use operator::WeightedOperator;
pub use velocity::{
    lp_gradient_ratio, normal_trace_residual, recover_velocity, stream_velocity,
    velocity_from_scaled, velocity_gradient_norm,
};

use crate::error::{LakeError, Result};
use crate::geometry::{Grid, ScalarField, VectorField};
use crate::numeric::{dot, norm2};

/// Grid, depth (carried by the grid) and right-hand side.
#[derive(Debug, Clone)]
pub struct WeightedPoissonProblem {
    pub grid: Arc<Grid>,
    pub rhs: ScalarField,
}

impl WeightedPoissonProblem {
    pub fn new(rhs: ScalarField) -> Result<Self> {
        if !rhs.is_finite() {
            return Err(LakeError::Configuration("right-hand side has non-finite values".into()));
        }
        Ok(Self { grid: rhs.grid().clone(), rhs })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::new(ScalarField::from_fn(grid, f))
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative residual target `|f - A Psi| / |f|`.
    pub tol: f64,
    /// Defaults to `20 * sqrt(cells)`.
    pub max_iter: Option<usize>,
    pub initial_guess: Option<Vec<f64>>,
    pub record_energy: bool,
    /// Depth offset in the weight `1/(b + offset)`; zero for the physical operator.
    pub weight_offset: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None, initial_guess: None, record_energy: false, weight_offset: 0.0 }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Stream function, scaled potential and velocity from one solve.
#[derive(Debug, Clone)]
pub struct StreamSolution {
    pub psi: ScalarField,
    pub phi_scaled: ScalarField,
    pub velocity: VectorField,
    /// Cells where `phi^(a+1)` was floored before dividing.
    pub floored: Vec<bool>,
    pub residual: f64,
    pub iterations: usize,
    /// Energy after each CG iteration (first entry: initial guess).
    pub energy_trace: Vec<f64>,
}

impl StreamSolution {
    pub fn grid(&self) -> &Arc<Grid> {
        self.psi.grid()
    }
}

pub fn assemble(problem: &WeightedPoissonProblem) -> Result<WeightedOperator> {
    WeightedOperator::assemble(problem.grid.clone(), 0.0)
}

pub fn solve(problem: &WeightedPoissonProblem, opts: &SolveOptions) -> Result<StreamSolution> {
    let op = WeightedOperator::assemble(problem.grid.clone(), opts.weight_offset)?;
    solve_with(&op, problem, opts)
}

/// Solve with an already assembled operator.
pub fn solve_with(
    op: &WeightedOperator,
    problem: &WeightedPoissonProblem,
    opts: &SolveOptions,
) -> Result<StreamSolution> {
    if !(opts.tol > 0.0) {
        return Err(LakeError::Configuration(format!("solver tolerance must be positive, got {}", opts.tol)));
    }
    let grid = problem.grid.clone();
    let n = grid.len();
    let max_iter = opts.max_iter.unwrap_or_else(|| (20.0 * (n as f64).sqrt()).ceil() as usize);
    let f = problem.rhs.values();
    let (psi, residual, iterations, energy_trace) = pcg(op, f, opts.initial_guess.as_deref(), opts.tol, max_iter, opts.record_energy)?;
    let psi = ScalarField::new(grid.clone(), psi);
    let (phi_scaled, floored) = scaled_potential(&psi);
    let velocity = velocity_from_scaled(&phi_scaled);
    Ok(StreamSolution { psi, phi_scaled, velocity, floored, residual, iterations, energy_trace })
}

/// `Phi = Psi / phi^(a+1)` with the divisor floored at `(h g_min / 4)^(a+1)`.
/// Flagged cells take the mean `Phi` of their unflagged neighbors when they
/// have any, so the floored quotient does not leak into `grad Phi`.
pub fn scaled_potential(psi: &ScalarField) -> (ScalarField, Vec<bool>) {
    let grid = psi.grid();
    let e = grid.exponent() + 1.0;
    let floor = (grid.h() * grid.shore_gradient_min() / 4.0).powf(e);
    let mut floored = vec![false; grid.len()];
    let mut vals: Vec<f64> = psi
        .values()
        .iter()
        .zip(grid.phi())
        .enumerate()
        .map(|(k, (&s, &ph))| {
            let d = ph.powf(e);
            if d < floor {
                floored[k] = true;
                s / floor
            } else {
                s / d
            }
        })
        .collect();
    let fills: Vec<(usize, f64)> = (0..grid.len())
        .filter(|&k| floored[k])
        .filter_map(|k| {
            let good: Vec<f64> = grid.neighbors()[k].iter().flatten().filter(|&&q| !floored[q]).map(|&q| vals[q]).collect();
            (!good.is_empty()).then(|| (k, good.iter().sum::<f64>() / good.len() as f64))
        })
        .collect();
    for (k, v) in fills {
        vals[k] = v;
    }
    (ScalarField::new(grid.clone(), vals), floored)
}

type PcgOutput = (Vec<f64>, f64, usize, Vec<f64>);

/// CG on `M = -A` (SPD) for `M psi = -f`, Jacobi preconditioned.
fn pcg(
    op: &WeightedOperator,
    f: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    record_energy: bool,
) -> Result<PcgOutput> {
    let n = f.len();
    let h2 = op.grid().cell_area();
    let g: Vec<f64> = f.iter().map(|v| -v).collect();
    let gnorm = norm2(&g);
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| -1.0 / d).collect();
    let mut x = match guess {
        Some(x0) if x0.len() == n => x0.to_vec(),
        _ => vec![0.0; n],
    };
    let mut trace = Vec::new();
    if gnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        if record_energy {
            trace.push(0.0);
        }
        return Ok((x, 0.0, 0, trace));
    }
    let mut mx = vec![0.0; n];
    op.apply_into(&x, &mut mx);
    // r = g - M x = g + A x
    let mut r: Vec<f64> = g.iter().zip(&mx).map(|(gi, ai)| gi + ai).collect();
    let energy = |x: &[f64], r: &[f64]| {
        // 1/2 x^T M x - g^T x = -1/2 (r + g)^T x
        -0.5 * r.iter().zip(&g).zip(x).map(|((ri, gi), xi)| (ri + gi) * xi).sum::<f64>() * h2
    };
    if record_energy {
        trace.push(energy(&x, &r));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm2(&r) / gnorm;
    if res <= tol {
        return Ok((x, res, 0, trace));
    }
    for it in 1..=max_iter {
        op.apply_into(&p, &mut ap);
        // curvature along p for M = -A
        let curv = -dot(&p, &ap);
        if !(curv > 0.0) {
            return Err(LakeError::IndefiniteOperator { iteration: it, curvature: curv });
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] += alpha * ap[i];
        }
        res = norm2(&r) / gnorm;
        if record_energy {
            trace.push(energy(&x, &r));
        }
        if res <= tol {
            return Ok((x, res, it, trace));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LakeError::NonConvergence { iterations: max_iter, residual: res })
}
