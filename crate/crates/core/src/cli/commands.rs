use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cli::config::{DiagnoseSection, KernelSection, RunConfig};
use crate::cli::output::{fmt_f64, read_field_csv, sha256_hex, InputRecord, OutputDir, RunManifest, SnapshotRecord};
use crate::diagnostics::{
    fit_gradient_constant, holder_quotient, holder_quotient_vector, uniqueness_report, UniquenessExperiment,
};
use crate::elliptic::{lp_gradient_ratio, normal_trace_residual, scaled_potential, solve, SolveOptions, WeightedPoissonProblem};
use crate::error::{LakeError, Result};
use crate::expr::Expr;
use crate::geometry::{Grid, Point, ScalarField, VectorField};
use crate::kernels::{
    approximate_identity_mass, calibrate_gamma, eval_g_eps, kernel_bound_report, operator_norm_growth,
    ray_samples, verify_model_identity, GrowthKernel, HalfSpacePoint, KernelParams, MassDomain,
};
use crate::transport::{Simulation, Snapshot, Trajectory, NORM_EXPONENTS};

pub(crate) type Scalars = BTreeMap<String, Option<f64>>;

fn put(s: &mut Scalars, key: impl Into<String>, v: f64) {
    s.insert(key.into(), v.is_finite().then_some(v));
}

fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section.as_ref().ok_or_else(|| LakeError::Validation(format!("config needs a [{name}] section")))
}

/// Artifacts and scalars of a finished subcommand, before the manifest is written.
pub(crate) struct Outcome {
    pub scalars: Scalars,
    pub snapshots: Vec<SnapshotRecord>,
    pub inputs: Vec<InputRecord>,
}

impl Outcome {
    fn new(scalars: Scalars) -> Self {
        Self { scalars, snapshots: Vec::new(), inputs: Vec::new() }
    }
}

fn l2(values: impl Iterator<Item = f64>, area: f64) -> f64 {
    (values.map(|v| v * v).sum::<f64>() * area).sqrt()
}

pub(crate) fn solve_elliptic(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let dom = require(&cfg.domain, "domain")?;
    let ell = require(&cfg.elliptic, "elliptic")?;
    let grid = dom.grid()?;
    let f = Expr::parse(&ell.f)?;
    let problem = WeightedPoissonProblem::from_fn(grid.clone(), |c| f.eval(c[0], c[1]))?;
    let opts = SolveOptions { tol: ell.tol, max_iter: ell.max_iter, weight_offset: ell.weight_offset, ..Default::default() };
    let sol = solve(&problem, &opts)?;
    let chart = grid.chart()?;
    let mut s = Scalars::new();
    put(&mut s, "cells", grid.len() as f64);
    put(&mut s, "h", grid.h());
    put(&mut s, "iterations", sol.iterations as f64);
    put(&mut s, "residual", sol.residual);
    put(&mut s, "floored_cells", sol.floored.iter().filter(|f| **f).count() as f64);
    put(&mut s, "trace_residual", normal_trace_residual(&sol.velocity, &chart, ell.trace_samples)?);
    for p in [3.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        if let Ok(r) = lp_gradient_ratio(&sol, &problem, p) {
            put(&mut s, format!("ratio_p{p}"), r);
        }
    }
    if let Some(src) = &ell.exact {
        let exact = Expr::parse(src)?;
        let area = grid.cell_area();
        let ex: Vec<f64> = grid.centers().iter().map(|c| exact.eval(c[0], c[1])).collect();
        let err = l2(sol.psi.values().iter().zip(&ex).map(|(a, b)| a - b), area);
        let norm = l2(ex.iter().copied(), area);
        put(&mut s, "l2_error", err);
        put(&mut s, "l2_relative_error", if norm > 0.0 { err / norm } else { f64::NAN });
    }
    let v = sol.velocity.values();
    let (v1, v2): (Vec<f64>, Vec<f64>) = v.iter().map(|w| (w[0], w[1])).unzip();
    out.write_field_csv(
        "solution.csv",
        &grid,
        &[("psi", sol.psi.values()), ("phi_scaled", sol.phi_scaled.values()), ("v1", &v1), ("v2", &v2)],
    )?;
    Ok(Outcome::new(s))
}

/// Smooth mode mix `sum c_k sin(k . x + theta_k)` with `sum |c_k| = 1`.
pub fn random_modes(seed: u64) -> impl Fn(Point) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let total: f64 = modes.iter().map(|m| m.3.abs()).sum();
    move |c: Point| modes.iter().map(|m| m.3 / total * (m.0 * c[0] + m.1 * c[1] + m.2).sin()).sum()
}

pub(crate) fn simulate(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let dom = require(&cfg.domain, "domain")?;
    let tr = require(&cfg.transport, "transport")?;
    let grid = dom.grid()?;
    let w0 = Expr::parse(&tr.omega0)?;
    let omega0 = match (&tr.perturbation, tr.eta) {
        (_, eta) if eta == 0.0 => ScalarField::from_fn(grid.clone(), |c| w0.eval(c[0], c[1])),
        (Some(p), eta) => {
            let p = Expr::parse(p)?;
            ScalarField::from_fn(grid.clone(), |c| w0.eval(c[0], c[1]) + eta * p.eval(c[0], c[1]))
        }
        (None, eta) => {
            let p = random_modes(cfg.run.seed);
            ScalarField::from_fn(grid.clone(), |c| w0.eval(c[0], c[1]) + eta * p(c))
        }
    };
    if !omega0.is_finite() {
        return Err(LakeError::Validation("transport.omega0 is not finite on the grid".into()));
    }
    let mut sim = Simulation::new(omega0, tr.transport_config())?;
    sim.run()?;
    let traj = sim.into_trajectory();
    let mut snapshots = Vec::new();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:04}.csv");
        let v = snap.velocity.values();
        let (v1, v2): (Vec<f64>, Vec<f64>) = v.iter().map(|w| (w[0], w[1])).unzip();
        out.write_field_csv(
            &name,
            &grid,
            &[("omega", snap.omega.values()), ("psi", snap.psi.values()), ("v1", &v1), ("v2", &v2)],
        )?;
        snapshots.push(SnapshotRecord { time: snap.time, file: name });
    }
    let mut header = vec!["time".to_string(), "steps".into(), "mass".into(), "max_abs".into()];
    let tag = |p: f64| if p.is_infinite() { "inf".to_string() } else { format!("{p}") };
    header.extend(NORM_EXPONENTS.iter().map(|p| format!("norm_b_{}", tag(*p))));
    header.extend(NORM_EXPONENTS.iter().map(|p| format!("norm_beps_{}", tag(*p))));
    header.extend(["trunc_2".into(), "trunc_4".into(), "energy".into(), "trace_residual".into(), "cg_iterations".into()]);
    let rows: Vec<Vec<String>> = traj
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![fmt_f64(r.time), r.steps.to_string(), fmt_f64(r.mass), fmt_f64(r.max_abs)];
            row.extend(r.norms_b.iter().chain(&r.norms_b_eps).map(|v| fmt_f64(*v)));
            match r.truncated {
                Some(t) => row.extend(t.iter().map(|v| fmt_f64(*v))),
                None => row.extend([String::new(), String::new()]),
            }
            row.extend([fmt_f64(r.energy), fmt_f64(r.trace_residual), r.cg_iterations.to_string()]);
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("diagnostics.csv", &header, &rows)?;

    let mut s = Scalars::new();
    let (first, last) = (&traj.rows[0], traj.rows.last().expect("at least one row"));
    put(&mut s, "cells", grid.len() as f64);
    put(&mut s, "steps", traj.steps as f64);
    put(&mut s, "final_time", last.time);
    let abs_mass: f64 = traj.snapshots[0].omega.values().iter().zip(grid.mean_depth()).map(|(w, b)| (b + tr.viscosity) * w.abs()).sum::<f64>()
        * grid.cell_area();
    put(&mut s, "mass_drift", if abs_mass > 0.0 { (last.mass - first.mass).abs() / abs_mass } else { 0.0 });
    let l2_0 = first.norms_b[1];
    put(&mut s, "l2_drift", if l2_0 > 0.0 { (last.norms_b[1] - l2_0).abs() / l2_0 } else { 0.0 });
    put(&mut s, "max_abs_initial", first.max_abs);
    put(&mut s, "max_abs_final", last.max_abs);
    put(&mut s, "max_principle_violations", traj.max_principle_violations as f64);
    put(&mut s, "trace_residual_max", traj.rows.iter().map(|r| r.trace_residual).fold(0.0, f64::max));
    Ok(Outcome { scalars: s, snapshots, inputs: Vec::new() })
}

/// Overrides taken from `kernel-check` flags.
#[derive(Debug, Clone, Default)]
pub struct KernelOverrides {
    pub a: Option<f64>,
    pub n: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub separations: Option<usize>,
}

impl KernelOverrides {
    pub fn apply(&self, k: &mut KernelSection) {
        if let Some(a) = self.a {
            k.a = a;
        }
        if let Some(n) = self.n {
            k.n = n;
        }
        if let Some(e) = &self.eps {
            k.eps = e.clone();
        }
        if let Some(s) = self.separations {
            k.separations = s;
        }
    }
}

fn point(n: usize, t: f64, xn: f64) -> Result<HalfSpacePoint> {
    let mut tang = vec![0.0; n - 1];
    tang[0] = t;
    HalfSpacePoint::new(tang, xn)
}

pub(crate) fn kernel_check(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let k = cfg.kernels.clone().unwrap_or_default();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut s = Scalars::new();
    let mut row = |section: &str, eps: Option<f64>, order: Option<usize>, quantity: &str, value: f64| {
        rows.push(vec![
            section.to_string(),
            fmt_f64(k.a),
            k.n.to_string(),
            eps.map(fmt_f64).unwrap_or_default(),
            order.map(|o| o.to_string()).unwrap_or_default(),
            quantity.to_string(),
            fmt_f64(value),
        ]);
    };
    let gamma = match k.gamma {
        Some(g) => g,
        None => calibrate_gamma(k.a, k.n, &k.calibration_eps)?,
    };
    row("calibration", None, None, if k.gamma.is_some() { "gamma_given" } else { "gamma_fitted" }, gamma);
    put(&mut s, "gamma", gamma);

    let centers = [point(k.n, 0.0, 0.5)?, point(k.n, 0.3, 1.0)?, point(k.n, -0.2, 2.0)?];
    let (fx, fy) = (point(k.n, 0.0, 0.8)?, point(k.n, 0.3, 0.5)?);
    let lo = 1e-3f64.ln();
    let seps: Vec<f64> =
        (0..k.separations).map(|i| (lo * (1.0 - i as f64 / (k.separations - 1) as f64)).exp()).collect();
    let samples: Vec<_> = if k.n == 2 {
        ray_samples(&seps)
    } else {
        seps.iter()
            .flat_map(|&r| [0.5 * r, r, 4.0 * r, 0.5].map(|xn| (r, xn)))
            .map(|(r, xn)| Ok((point(k.n, 0.0, xn)?, point(k.n, r, xn)?)))
            .collect::<Result<_>>()?
    };
    let g_ref = eval_g_eps(&KernelParams::new(k.a, k.n, gamma, 0.1)?, &fx, &fy);
    let mut worst_mass: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for &eps in &k.eps {
        let p = KernelParams::new(k.a, k.n, gamma, eps)?;
        for (i, x) in centers.iter().enumerate() {
            let m = approximate_identity_mass(&p, x, MassDomain::Ball { radius: 0.5 * x.normal })?;
            worst_mass = worst_mass.max((m - 1.0).abs());
            row("mass", Some(eps), None, &format!("mass_x{i}"), m);
        }
        let id1 = verify_model_identity(&p, &[(fx.clone(), fy.clone())], k.h_fd)?.max_relative;
        let id2 = verify_model_identity(&p, &[(fx.clone(), fy.clone())], 0.5 * k.h_fd)?.max_relative;
        worst_identity = worst_identity.max(id1);
        row("identity", Some(eps), None, "relative_residual", id1);
        row("identity", Some(eps), None, "observed_order", (id1 / id2).log2());
        row("off_diagonal", Some(eps), None, "g_ratio_to_eps_0.1", eval_g_eps(&p, &fx, &fy) / g_ref);
        if k.a >= 1.0 {
            for &order in &k.orders {
                let b = kernel_bound_report(&p, order, &samples)?;
                row("bounds", Some(eps), Some(order), "max_plain", b.max_plain);
                row("bounds", Some(eps), Some(order), "plain_spread", b.plain_spread);
                if let (Some(w), Some(sp)) = (b.max_weighted, b.weighted_spread) {
                    row("bounds", Some(eps), Some(order), "max_weighted", w);
                    row("bounds", Some(eps), Some(order), "weighted_spread", sp);
                }
            }
        }
        if k.growth_m >= 2 && k.n == 2 {
            let ps = [2.0, 4.0, 8.0, 16.0, 32.0];
            let seed = cfg.run.seed;
            let g = operator_norm_growth(&GrowthKernel::Truncated(p), &ps, k.growth_m, k.growth_tests, seed)?;
            row("growth", Some(eps), None, "truncated_slope", g.slope);
            let kappa = 0.5;
            let g = operator_norm_growth(&GrowthKernel::Remainder { params: p, kappa }, &ps, k.growth_m, k.growth_tests, seed)?;
            row("growth", Some(eps), None, "remainder_slope", g.slope);
        }
    }
    put(&mut s, "max_mass_deviation", worst_mass);
    put(&mut s, "max_identity_residual", worst_identity);
    out.write_csv("kernel_report.csv", &["section", "a", "n", "eps", "k", "quantity", "value"], &rows)?;
    Ok(Outcome::new(s))
}

struct LoadedRun {
    path: PathBuf,
    trajectory: Trajectory,
    grid: Arc<Grid>,
}

fn load_run(path: &Path) -> Result<(LoadedRun, InputRecord)> {
    let bytes = fs::read(path)?;
    let manifest = RunManifest::read(path)?;
    if manifest.subcommand != "simulate" {
        return Err(LakeError::Validation(format!(
            "{} records a {} run, diagnose needs simulate runs",
            path.display(),
            manifest.subcommand
        )));
    }
    let dom = require(&manifest.config.domain, "domain")?;
    let grid = dom.grid()?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut snapshots = Vec::with_capacity(manifest.snapshots.len());
    for rec in &manifest.snapshots {
        let file = dir.join(&rec.file);
        let listed = manifest.files.iter().find(|f| f.name == rec.file);
        let data = fs::read(&file)?;
        if listed.map(|f| f.sha256 != sha256_hex(&data)).unwrap_or(true) {
            return Err(LakeError::Validation(format!("{} does not match its manifest hash", file.display())));
        }
        let cols = read_field_csv(&file, &grid, &["omega", "psi", "v1", "v2"])?;
        let velocity = VectorField::new(grid.clone(), cols[2].iter().zip(&cols[3]).map(|(a, b)| [*a, *b]).collect());
        snapshots.push(Snapshot {
            time: rec.time,
            omega: ScalarField::new(grid.clone(), cols[0].clone()),
            psi: ScalarField::new(grid.clone(), cols[1].clone()),
            velocity,
        });
    }
    if snapshots.is_empty() {
        return Err(LakeError::Validation(format!("{} lists no snapshots", path.display())));
    }
    let input = InputRecord { path: path.display().to_string(), sha256: sha256_hex(&bytes) };
    let trajectory = Trajectory { snapshots, ..Default::default() };
    Ok((LoadedRun { path: path.to_path_buf(), trajectory, grid }, input))
}

pub(crate) fn diagnose(cfg: &RunConfig, manifests: &[PathBuf], out: &mut OutputDir) -> Result<Outcome> {
    let d = cfg.diagnose.clone().unwrap_or_else(DiagnoseSection::default);
    let paths: Vec<PathBuf> =
        if manifests.is_empty() { d.runs.iter().map(PathBuf::from).collect() } else { manifests.to_vec() };
    if paths.is_empty() || paths.len() > 2 {
        return Err(LakeError::Validation(format!("diagnose takes one or two manifests, got {}", paths.len())));
    }
    let mut runs = Vec::new();
    let mut inputs = Vec::new();
    for p in &paths {
        let (run, input) = load_run(p)?;
        runs.push(run);
        inputs.push(input);
    }
    if runs.len() == 2 && !runs[0].grid.same_layout(&runs[1].grid) {
        return Err(LakeError::GridMismatch(format!(
            "{} and {} were run on different grids",
            runs[0].path.display(),
            runs[1].path.display()
        )));
    }
    let mut s = Scalars::new();
    let mut summary = String::new();
    let mut all_pass = true;

    let mut ratio_rows = Vec::new();
    for (r, run) in runs.iter().enumerate() {
        let mut worst_trend: f64 = 0.0;
        for snap in &run.trajectory.snapshots {
            let bw: Vec<f64> = snap.omega.values().iter().zip(run.grid.mean_depth()).map(|(w, b)| b * w).collect();
            let source = ScalarField::new(run.grid.clone(), bw);
            let fit = match fit_gradient_constant(&snap.velocity, &source, &d.p) {
                Ok(f) => f,
                Err(LakeError::UndefinedRatio(_)) => continue,
                Err(e) => return Err(e),
            };
            for (p, ratio) in fit.p.iter().zip(&fit.ratios) {
                ratio_rows.push(vec![r.to_string(), fmt_f64(snap.time), fmt_f64(*p), fmt_f64(*ratio)]);
            }
            if fit.low_p_max > 0.0 {
                worst_trend = worst_trend.max(fit.constant / fit.low_p_max);
            }
        }
        let ok = worst_trend <= 1.5;
        all_pass &= ok;
        put(&mut s, format!("run{r}_ratio_trend"), worst_trend);
        summary.push_str(&format!(
            "{} gradient-uniformity run={r} max_over_low_p={worst_trend:.6e} limit=1.5\n",
            if ok { "PASS" } else { "FAIL" }
        ));
    }
    out.write_csv("ratios.csv", &["run", "time", "p", "ratio"], &ratio_rows)?;

    let mut holder_rows = Vec::new();
    for (r, run) in runs.iter().enumerate() {
        for (k, snap) in run.trajectory.snapshots.iter().enumerate() {
            let seed = cfg.run.seed.wrapping_add(k as u64);
            let (phi, _) = scaled_potential(&snap.psi);
            for &mu in &d.mu {
                let qv = holder_quotient_vector(&snap.velocity, mu, d.pairs, seed)?;
                let qp = holder_quotient(&phi, mu, d.pairs, seed)?;
                for (field, q) in [("velocity", qv), ("phi_scaled", qp)] {
                    holder_rows.push(vec![
                        r.to_string(),
                        fmt_f64(snap.time),
                        field.to_string(),
                        fmt_f64(mu),
                        fmt_f64(q.quotient),
                        q.pairs.to_string(),
                    ]);
                }
            }
        }
    }
    out.write_csv("holder.csv", &["run", "time", "field", "mu", "quotient", "pairs"], &holder_rows)?;

    if runs.len() == 2 {
        let exp = UniquenessExperiment::new(&runs[0].trajectory, &runs[1].trajectory, &d.p)?;
        let rep = uniqueness_report(&exp, d.slack, d.y0_tol)?;
        let rows: Vec<Vec<String>> = (0..rep.times.len())
            .map(|i| {
                vec![
                    fmt_f64(rep.times[i]),
                    fmt_f64(rep.y[i]),
                    fmt_f64(rep.envelope[i]),
                    rep.saturated[i].to_string(),
                    fmt_f64(rep.slack * rep.envelope[i]),
                ]
            })
            .collect();
        out.write_csv("envelope.csv", &["time", "y", "envelope", "saturated", "bound"], &rows)?;
        put(&mut s, "m", rep.m);
        put(&mut s, "m_p999", rep.m_p999);
        put(&mut s, "c", rep.c);
        put(&mut s, "y0", rep.y[0]);
        put(&mut s, "y_max", rep.y.iter().cloned().fold(0.0, f64::max));
        all_pass &= rep.pass;
        summary.push_str(&format!(
            "{} envelope slack={} M={:.6e} M_p99.9={:.6e} C={:.6e} saturated_snapshots={}\n",
            if rep.pass { "PASS" } else { "FAIL" },
            rep.slack,
            rep.m,
            rep.m_p999,
            rep.c,
            rep.saturated.iter().filter(|s| **s).count()
        ));
    }
    summary.push_str(if all_pass { "overall PASS\n" } else { "overall FAIL\n" });
    put(&mut s, "pass", if all_pass { 1.0 } else { 0.0 });
    out.write("summary.txt", summary.as_bytes())?;
    Ok(Outcome { scalars: s, snapshots: Vec::new(), inputs })
}
