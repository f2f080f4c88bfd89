use std::cell::RefCell;
use std::f64::consts::PI;

use crate::error::{LakeError, Result};
use crate::kernels::model::{g_eps_reduced, Reduced};
use crate::kernels::{HalfSpacePoint, KernelParams};
use crate::quad::{geometric_breaks, integrate_pieces};

const MASS_REL_TOL: f64 = 1e-9;

/// Integration region for `int G^eps(x, y) dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassDomain {
    /// Ball of the given radius centered at `x`; must stay in the half-space.
    Ball { radius: f64 },
    /// Planar box `[x0, x1] x [y0, y1]` containing `x` (requires `n = 2`).
    Box { x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// Surface measure of the unit sphere `S^(m-1)` in `R^m`.
fn sphere_area(m: usize) -> f64 {
    match m {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 2.0) * sphere_area(m - 2),
    }
}

/// Outer angular integral of a fallible inner integral; the first inner
/// failure is reported.
fn guarded(f: impl Fn(f64) -> Result<f64>, breaks: &[f64]) -> Result<f64> {
    let err = RefCell::new(None);
    let v = integrate_pieces(
        |b| {
            f(b).unwrap_or_else(|e| {
                err.borrow_mut().get_or_insert(e);
                0.0
            })
        },
        breaks,
        MASS_REL_TOL,
        0.0,
    )?;
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v.value),
    }
}

/// Radial breakpoints resolving the concentration scale `sqrt(eps) x_n`.
fn radial_breaks(scale: f64, rmax: f64) -> Vec<f64> {
    let lo = (1e-3 * scale).min(0.5 * rmax);
    let mut br = vec![0.0];
    br.extend(geometric_breaks(lo, rmax, 2.0));
    br
}

/// `int_domain G^eps(x, y) dy` in polar coordinates about `x`, with `beta`
/// the angle between `y - x` and the normal axis.
pub fn approximate_identity_mass(params: &KernelParams, x: &HalfSpacePoint, domain: MassDomain) -> Result<f64> {
    if x.dim() != params.n {
        return Err(LakeError::Precondition("point dimension differs from n".into()));
    }
    if !(x.normal > 0.0) {
        return Err(LakeError::Precondition("reference point must be interior".into()));
    }
    let n = params.n;
    let xn = x.normal;
    let scale = params.eps.sqrt() * xn;
    let radial = |beta: f64, rmax: f64| -> Result<f64> {
        let (sb, cb) = beta.sin_cos();
        let g = |s: f64| {
            let r = Reduced { tangential_sq: (s * sb).powi(2), xn, yn: (xn + s * cb).max(0.0) };
            g_eps_reduced(params, r) * s.powi(n as i32 - 1)
        };
        Ok(integrate_pieces(g, &radial_breaks(scale, rmax), MASS_REL_TOL, 0.0)?.value)
    };
    match domain {
        MassDomain::Ball { radius } => {
            if !(radius > 0.0) || radius > xn {
                return Err(LakeError::Precondition(format!(
                    "ball radius must lie in (0, x_n] = (0, {xn}], got {radius}"
                )));
            }
            let weight = sphere_area(n - 1);
            let v = guarded(|beta| Ok(weight * beta.sin().powi(n as i32 - 2) * radial(beta, radius)?), &[0.0, 0.5 * PI, PI])?;
            Ok(v)
        }
        MassDomain::Box { x0, x1, y0, y1 } => {
            if n != 2 {
                return Err(LakeError::Precondition("box domains are planar".into()));
            }
            let t = x.tangential[0];
            if !(x0 < t && t < x1 && y0 < xn && xn < y1 && y0 >= 0.0) {
                return Err(LakeError::Precondition("box must contain x and lie in the half-plane".into()));
            }
            // distance from x to the box edge along direction beta (from the normal axis)
            let reach = |beta: f64| {
                let (sb, cb) = beta.sin_cos();
                let mut r = f64::INFINITY;
                if sb > 0.0 {
                    r = r.min((x1 - t) / sb);
                } else if sb < 0.0 {
                    r = r.min((x0 - t) / sb);
                }
                if cb > 0.0 {
                    r = r.min((y1 - xn) / cb);
                } else if cb < 0.0 {
                    r = r.min((y0 - xn) / cb);
                }
                r
            };
            let corners = [(x1, y1), (x0, y1), (x0, y0), (x1, y0)];
            let mut br = vec![-PI, PI];
            for (cx, cy) in corners {
                br.push((cx - t).atan2(cy - xn));
            }
            br.sort_by(|a, b| a.partial_cmp(b).unwrap());
            br.dedup();
            guarded(|beta| radial(beta, reach(beta)), &br)
        }
    }
}

/// Ball mass at `x = (0', 1)`, radius `1/2`. The mass is invariant under
/// dilations about the boundary, so this is the mass at any `x` with a ball
/// of radius `x_n / 2`.
pub fn reference_mass(params: &KernelParams) -> Result<f64> {
    let x = HalfSpacePoint::new(vec![0.0; params.n - 1], 1.0)?;
    approximate_identity_mass(params, &x, MassDomain::Ball { radius: 0.5 })
}

/// `gamma` making `lim_{eps -> 0} int G^eps dy = 1`. Masses with `gamma = 1`
/// are computed on the reference ball for each `eps`, then extrapolated
/// assuming an error linear in `eps`. The last two extrapolants must agree
/// to `1e-3` relative.
pub fn calibrate_gamma(a: f64, n: usize, eps_sequence: &[f64]) -> Result<f64> {
    if eps_sequence.len() < 3 {
        return Err(LakeError::Calibration("need at least three eps values".into()));
    }
    if eps_sequence.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LakeError::Calibration("eps sequence must be strictly decreasing".into()));
    }
    let masses: Vec<f64> = eps_sequence
        .iter()
        .map(|&e| reference_mass(&KernelParams::new(a, n, 1.0, e)?))
        .collect::<Result<_>>()?;
    let extrap: Vec<f64> = eps_sequence
        .windows(2)
        .zip(masses.windows(2))
        .map(|(e, m)| m[1] + (m[1] - m[0]) * e[1] / (e[0] - e[1]))
        .collect();
    let last = extrap[extrap.len() - 1];
    let prev = extrap[extrap.len() - 2];
    if !(last > 0.0) || !last.is_finite() {
        return Err(LakeError::Calibration(format!("extrapolated mass {last} is not positive")));
    }
    if (last - prev).abs() > 1e-3 * last {
        return Err(LakeError::Calibration(format!(
            "extrapolation has not settled: {prev} vs {last} (masses {masses:?})"
        )));
    }
    Ok(1.0 / last)
}
