//! C ABI over `lakesim`.
//!
//! Objects are opaque handles created by `*_new` functions and released by
//! the matching `*_free`. Every fallible call returns a [`LakesimStatus`];
//! on failure the message is kept per thread and can be copied out with
//! [`lakesim_last_error`]. Array arguments carry their length, which must
//! equal the number of grid cells (twice that for vector fields stored as
//! interleaved `x, y` pairs).

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use lakesim::elliptic::{solve, SolveOptions, StreamSolution, WeightedPoissonProblem};
use lakesim::geometry::{build_grid, DefiningFunction, DepthProfile, Grid, ScalarField};
use lakesim::kernels::{eval_e_eps, eval_g_eps, HalfSpacePoint, KernelParams};
use lakesim::transport::{Simulation, TransportConfig};
use lakesim::{ErrorClass, LakeError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LakesimStatus {
    Ok = 0,
    NullArgument = 1,
    Validation = 2,
    Configuration = 3,
    Numerical = 4,
    Io = 5,
    LengthMismatch = 6,
    Panic = 7,
}

/// Masked grid with its depth profile.
pub struct LakesimGrid {
    grid: Arc<Grid>,
}

/// Result of one elliptic solve.
pub struct LakesimSolution {
    sol: StreamSolution,
}

/// Vorticity transport run with its recorded snapshots.
pub struct LakesimSimulation {
    sim: Simulation,
}

/// Transport settings. A non-positive `truncation` disables the monitor.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LakesimTransportParams {
    pub cfl: f64,
    pub t_end: f64,
    pub viscosity: f64,
    pub output_every: f64,
    pub truncation: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &LakeError) -> LakesimStatus {
    match e.class() {
        ErrorClass::Validation => LakesimStatus::Validation,
        ErrorClass::Configuration => LakesimStatus::Configuration,
        ErrorClass::Numerical => LakesimStatus::Numerical,
        ErrorClass::Io => LakesimStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Length { what: &'static str, got: usize, want: usize },
    Lake(LakeError),
}

impl From<LakeError> for Fail {
    fn from(e: LakeError) -> Self {
        Fail::Lake(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LakesimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LakesimStatus::Ok
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            LakesimStatus::NullArgument
        }
        Ok(Err(Fail::Length { what, got, want })) => {
            set_error(format!("`{what}` has length {got}, expected {want}"));
            LakesimStatus::LengthMismatch
        }
        Ok(Err(Fail::Lake(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LakesimStatus::Panic
        }
    }
}

unsafe fn href<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, want: usize, name: &'static str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    if len != want {
        return Err(Fail::Length { what: name, got: len, want });
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], p: *mut f64, len: usize, name: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    if len != src.len() {
        return Err(Fail::Length { what: name, got: len, want: src.len() });
    }
    std::slice::from_raw_parts_mut(p, len).copy_from_slice(src);
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T, name: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(name));
    }
    out.write(v);
    Ok(())
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes. Returns the full message length excluding the
/// terminator; pass `buf = NULL` to query it.
///
/// # Safety
/// `buf` must be NULL or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lakesim_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn lakesim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Disk of radius `radius`, depth `b = phi^a`, spacing `h`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn lakesim_grid_new_disk(radius: f64, a: f64, h: f64, out: *mut *mut LakesimGrid) -> LakesimStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let profile = DepthProfile::new(DefiningFunction::disk(radius)?, a)?;
        let grid = Arc::new(build_grid(&profile, h)?);
        put(out, Box::into_raw(Box::new(LakesimGrid { grid })), "out")
    })
}

/// Grid from the `[domain]` section of a TOML run configuration.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn lakesim_grid_from_config(config: *const c_char, out: *mut *mut LakesimGrid) -> LakesimStatus {
    guard(|| {
        if config.is_null() {
            return Err(Fail::Null("config"));
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| LakeError::Validation(format!("config is not UTF-8: {e}")))?;
        let cfg = lakesim::cli::parse_config(text).map_err(LakeError::from)?;
        let dom = cfg.domain.ok_or_else(|| LakeError::Validation("config needs a [domain] section".into()))?;
        let grid = dom.grid()?;
        put(out, Box::into_raw(Box::new(LakesimGrid { grid })), "out")
    })
}

/// # Safety
/// `grid` must come from a `lakesim_grid_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lakesim_grid_free(grid: *mut LakesimGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_grid_len(grid: *const LakesimGrid, out: *mut usize) -> LakesimStatus {
    guard(|| put(out, href(grid, "grid")?.grid.len(), "out"))
}

/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_grid_spacing(grid: *const LakesimGrid, out: *mut f64) -> LakesimStatus {
    guard(|| put(out, href(grid, "grid")?.grid.h(), "out"))
}

/// Cell centers as interleaved `x, y`; `len` is twice the cell count.
///
/// # Safety
/// `xy` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lakesim_grid_centers(grid: *const LakesimGrid, xy: *mut f64, len: usize) -> LakesimStatus {
    guard(|| {
        let flat: Vec<f64> = href(grid, "grid")?.grid.centers().iter().flat_map(|c| *c).collect();
        copy_out(&flat, xy, len, "xy")
    })
}

/// Depth `b` at the cell centers.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lakesim_grid_depth(grid: *const LakesimGrid, out: *mut f64, len: usize) -> LakesimStatus {
    guard(|| copy_out(href(grid, "grid")?.grid.depth(), out, len, "out"))
}

/// Solves `div((1/b) grad Psi) = rhs`, `Psi = 0` on the shore, to relative
/// residual `tol`.
///
/// # Safety
/// `grid` must be live, `rhs` must hold `len` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_solve_elliptic(
    grid: *const LakesimGrid,
    rhs: *const f64,
    len: usize,
    tol: f64,
    out: *mut *mut LakesimSolution,
) -> LakesimStatus {
    guard(|| {
        let g = &href(grid, "grid")?.grid;
        let f = slice_in(rhs, len, g.len(), "rhs")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let problem = WeightedPoissonProblem::new(ScalarField::new(g.clone(), f.to_vec()))?;
        let sol = solve(&problem, &SolveOptions::with_tol(tol))?;
        put(out, Box::into_raw(Box::new(LakesimSolution { sol })), "out")
    })
}

/// # Safety
/// `sol` must come from [`lakesim_solve_elliptic`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lakesim_solution_free(sol: *mut LakesimSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be live; `iterations` and `residual` writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_solution_stats(
    sol: *const LakesimSolution,
    iterations: *mut usize,
    residual: *mut f64,
) -> LakesimStatus {
    guard(|| {
        let s = &href(sol, "sol")?.sol;
        put(iterations, s.iterations, "iterations")?;
        put(residual, s.residual, "residual")
    })
}

/// Stream function at the cell centers.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lakesim_solution_psi(sol: *const LakesimSolution, out: *mut f64, len: usize) -> LakesimStatus {
    guard(|| copy_out(href(sol, "sol")?.sol.psi.values(), out, len, "out"))
}

/// Scaled potential `Psi / phi^(a+1)`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lakesim_solution_phi_scaled(
    sol: *const LakesimSolution,
    out: *mut f64,
    len: usize,
) -> LakesimStatus {
    guard(|| copy_out(href(sol, "sol")?.sol.phi_scaled.values(), out, len, "out"))
}

/// Velocity as interleaved `v1, v2`; `len` is twice the cell count.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lakesim_solution_velocity(
    sol: *const LakesimSolution,
    out: *mut f64,
    len: usize,
) -> LakesimStatus {
    guard(|| {
        let flat: Vec<f64> = href(sol, "sol")?.sol.velocity.values().iter().flat_map(|v| *v).collect();
        copy_out(&flat, out, len, "out")
    })
}

/// Defaults: `cfl = 0.5`, `t_end = 1`, inviscid, snapshots every `0.1`, no truncation.
#[no_mangle]
pub extern "C" fn lakesim_transport_params_default() -> LakesimTransportParams {
    let d = TransportConfig::default();
    LakesimTransportParams { cfl: d.cfl, t_end: d.t_end, viscosity: d.viscosity, output_every: d.output_every, truncation: 0.0 }
}

/// Prepares a run from initial vorticity `omega0`.
///
/// # Safety
/// `grid` and `params` must be valid, `omega0` must hold `len` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_simulation_new(
    grid: *const LakesimGrid,
    omega0: *const f64,
    len: usize,
    params: *const LakesimTransportParams,
    out: *mut *mut LakesimSimulation,
) -> LakesimStatus {
    guard(|| {
        let g = &href(grid, "grid")?.grid;
        let w = slice_in(omega0, len, g.len(), "omega0")?;
        let p = href(params, "params")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let config = TransportConfig {
            cfl: p.cfl,
            t_end: p.t_end,
            viscosity: p.viscosity,
            output_every: p.output_every,
            truncation: (p.truncation > 0.0).then_some(p.truncation),
            ..TransportConfig::default()
        };
        config.validate().map_err(|e| LakeError::Validation(e.to_string()))?;
        let sim = Simulation::new(ScalarField::new(g.clone(), w.to_vec()), config)?;
        put(out, Box::into_raw(Box::new(LakesimSimulation { sim })), "out")
    })
}

/// Advances to the end time. After a failure the snapshots recorded so far
/// stay readable.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lakesim_simulation_run(sim: *mut LakesimSimulation) -> LakesimStatus {
    guard(|| {
        let s = sim.as_mut().ok_or(Fail::Null("sim"))?;
        s.sim.run()?;
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`lakesim_simulation_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lakesim_simulation_free(sim: *mut LakesimSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// # Safety
/// `sim` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_simulation_snapshot_count(
    sim: *const LakesimSimulation,
    out: *mut usize,
) -> LakesimStatus {
    guard(|| put(out, href(sim, "sim")?.sim.trajectory().snapshots.len(), "out"))
}

fn snapshot(sim: &LakesimSimulation, index: usize) -> Result<&lakesim::transport::Snapshot, Fail> {
    let snaps = &sim.sim.trajectory().snapshots;
    snaps.get(index).ok_or_else(|| {
        Fail::Lake(LakeError::Validation(format!("snapshot {index} out of range ({} recorded)", snaps.len())))
    })
}

/// Time, `sum b^eps omega h^2` and `|sqrt(b) v|_2^2` of snapshot `index`.
///
/// # Safety
/// `sim` must be live; the output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_simulation_snapshot_info(
    sim: *const LakesimSimulation,
    index: usize,
    time: *mut f64,
    mass: *mut f64,
    energy: *mut f64,
) -> LakesimStatus {
    guard(|| {
        let s = href(sim, "sim")?;
        let snap = snapshot(s, index)?;
        let row = &s.sim.trajectory().rows[index];
        put(time, snap.time, "time")?;
        put(mass, row.mass, "mass")?;
        put(energy, row.energy, "energy")
    })
}

/// Vorticity of snapshot `index`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lakesim_simulation_omega(
    sim: *const LakesimSimulation,
    index: usize,
    out: *mut f64,
    len: usize,
) -> LakesimStatus {
    guard(|| copy_out(snapshot(href(sim, "sim")?, index)?.omega.values(), out, len, "out"))
}

fn planar_pair(x: *const f64, y: *const f64) -> Result<(HalfSpacePoint, HalfSpacePoint), Fail> {
    // SAFETY: callers pass pointers to two doubles each.
    let (x, y) = unsafe { (slice_in(x, 2, 2, "x")?, slice_in(y, 2, 2, "y")?) };
    Ok((HalfSpacePoint::new(vec![x[0]], x[1])?, HalfSpacePoint::new(vec![y[0]], y[1])?))
}

/// Truncated fundamental solution `E^eps(x, y)` in the plane; points are
/// `(x_1, x_n)` with `x_n >= 0`.
///
/// # Safety
/// `x` and `y` must each point to two doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_kernel_e_eps(
    a: f64,
    gamma: f64,
    eps: f64,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> LakesimStatus {
    guard(|| {
        let p = KernelParams::new(a, 2, gamma, eps)?;
        let (x, y) = planar_pair(x, y)?;
        put(out, eval_e_eps(&p, &x, &y)?, "out")
    })
}

/// Approximate identity `G^eps(x, y)` in the plane.
///
/// # Safety
/// `x` and `y` must each point to two doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lakesim_kernel_g_eps(
    a: f64,
    gamma: f64,
    eps: f64,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> LakesimStatus {
    guard(|| {
        let p = KernelParams::new(a, 2, gamma, eps)?;
        let (x, y) = planar_pair(x, y)?;
        put(out, eval_g_eps(&p, &x, &y), "out")
    })
}
