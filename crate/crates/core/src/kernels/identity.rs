use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{LakeError, Result};
use crate::kernels::model::{eval_e_eps, eval_g_eps};
use crate::kernels::{HalfSpacePoint, KernelParams};

/// Per-pair outcome of the finite-difference check of `L E^eps = G^eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub h_fd: f64,
    pub pairs: Vec<PairResidual>,
    pub max_relative: f64,
}

/// `-x_n Delta_x E - (a+2) d_{x_n} E` by centered differences with step `h`.
fn model_operator_fd(p: &KernelParams, x: &HalfSpacePoint, y: &HalfSpacePoint, h: f64) -> Result<f64> {
    let d = x.dim();
    let e0 = eval_e_eps(p, x, y)?;
    let mut lap = 0.0;
    let mut dn = 0.0;
    for k in 0..d {
        let ep = eval_e_eps(p, &x.shifted(k, h), y)?;
        let em = eval_e_eps(p, &x.shifted(k, -h), y)?;
        lap += (ep - 2.0 * e0 + em) / (h * h);
        if k == d - 1 {
            dn = (ep - em) / (2.0 * h);
        }
    }
    Ok(-x.normal * lap - (p.a + 2.0) * dn)
}

/// Applies the model operator in `x` to `E^eps` by finite differences and
/// compares with `G^eps`. Pairs with `G^eps = 0` contribute their absolute
/// deviation.
pub fn verify_model_identity(
    params: &KernelParams,
    pairs: &[(HalfSpacePoint, HalfSpacePoint)],
    h_fd: f64,
) -> Result<IdentityReport> {
    if !(h_fd > 0.0) {
        return Err(LakeError::Precondition(format!("finite-difference step must be positive, got {h_fd}")));
    }
    let out: Result<Vec<PairResidual>> = pairs
        .par_iter()
        .map(|(x, y)| {
            if x.dim() != params.n || y.dim() != params.n {
                return Err(LakeError::Precondition("point dimension differs from n".into()));
            }
            let rhs = eval_g_eps(params, x, y);
            let lhs = if y.normal == 0.0 { 0.0 } else { model_operator_fd(params, x, y, h_fd)? };
            let dev = (lhs - rhs).abs();
            let relative = if rhs != 0.0 { dev / rhs.abs() } else { dev };
            Ok(PairResidual { lhs, rhs, relative })
        })
        .collect();
    let pairs = out?;
    let max_relative = pairs.iter().map(|r| r.relative).fold(0.0, f64::max);
    Ok(IdentityReport { h_fd, pairs, max_relative })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSample {
    pub distance: f64,
    /// `|grad^k E| |x-y|^(n+k-1)`
    pub plain: f64,
    /// `|x_n grad^k E| |x-y|^(n+k-2)`, for `k >= 1`
    pub weighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBoundReport {
    pub k: usize,
    pub samples: Vec<BoundSample>,
    pub max_plain: f64,
    pub max_weighted: Option<f64>,
    /// Largest over smallest of the per-scale maxima (scales binned by
    /// octave of `|x-y|`). A power-law drift shows up as a large spread.
    pub plain_spread: f64,
    pub weighted_spread: Option<f64>,
}

/// Norm of the `k`-th `x`-derivative tensor of `E^eps` (Frobenius for `k = 2`).
fn derivative_norm(p: &KernelParams, x: &HalfSpacePoint, y: &HalfSpacePoint, k: usize, h: f64) -> Result<f64> {
    let d = x.dim();
    let e = |z: &HalfSpacePoint| eval_e_eps(p, z, y);
    match k {
        0 => Ok(e(x)?.abs()),
        1 => {
            let mut s = 0.0;
            for i in 0..d {
                let g = (e(&x.shifted(i, h))? - e(&x.shifted(i, -h))?) / (2.0 * h);
                s += g * g;
            }
            Ok(s.sqrt())
        }
        2 => {
            let e0 = e(x)?;
            let mut s = 0.0;
            for i in 0..d {
                let dii = (e(&x.shifted(i, h))? - 2.0 * e0 + e(&x.shifted(i, -h))?) / (h * h);
                s += dii * dii;
                for j in (i + 1)..d {
                    let pp = e(&x.shifted(i, h).shifted(j, h))?;
                    let pm = e(&x.shifted(i, h).shifted(j, -h))?;
                    let mp = e(&x.shifted(i, -h).shifted(j, h))?;
                    let mm = e(&x.shifted(i, -h).shifted(j, -h))?;
                    let dij = (pp - pm - mp + mm) / (4.0 * h * h);
                    s += 2.0 * dij * dij;
                }
            }
            Ok(s.sqrt())
        }
        _ => Err(LakeError::Precondition(format!("derivative order must be 0, 1 or 2, got {k}"))),
    }
}

fn octave_spread(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut bins: std::collections::BTreeMap<i64, f64> = Default::default();
    for (dist, v) in pairs {
        let b = dist.log2().round() as i64;
        let e = bins.entry(b).or_insert(0.0);
        *e = e.max(v);
    }
    let hi = bins.values().cloned().fold(0.0, f64::max);
    let lo = bins.values().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Scale-normalized derivative sizes of `E^eps`. Finite-difference steps
/// are `max(1e-4, 1e-2 |x-y|)`.
pub fn kernel_bound_report(
    params: &KernelParams,
    k: usize,
    samples: &[(HalfSpacePoint, HalfSpacePoint)],
) -> Result<KernelBoundReport> {
    if params.a < 1.0 {
        return Err(LakeError::Precondition(format!("kernel bounds need a >= 1, got {}", params.a)));
    }
    if k > 2 {
        return Err(LakeError::Precondition(format!("derivative order must be 0, 1 or 2, got {k}")));
    }
    let n = params.n as i32;
    let out: Result<Vec<BoundSample>> = samples
        .par_iter()
        .map(|(x, y)| {
            let r = x.distance(y);
            if r == 0.0 {
                return Err(LakeError::Precondition("kernel bounds need x != y".into()));
            }
            let h = (1e-2 * r).max(1e-4);
            let g = derivative_norm(params, x, y, k, h)?;
            let plain = g * r.powi(n + k as i32 - 1);
            let weighted = (k >= 1).then(|| x.normal * g * r.powi(n + k as i32 - 2));
            Ok(BoundSample { distance: r, plain, weighted })
        })
        .collect();
    let samples = out?;
    let max_plain = samples.iter().map(|s| s.plain).fold(0.0, f64::max);
    let max_weighted = (k >= 1).then(|| samples.iter().filter_map(|s| s.weighted).fold(0.0, f64::max));
    let plain_spread = octave_spread(samples.iter().map(|s| (s.distance, s.plain)));
    let weighted_spread =
        (k >= 1).then(|| octave_spread(samples.iter().filter_map(|s| s.weighted.map(|w| (s.distance, w)))));
    Ok(KernelBoundReport { k, samples, max_plain, max_weighted, plain_spread, weighted_spread })
}

/// Planar sample cloud: at each separation `r`, base points at heights
/// `r/2, r, 4r, 1/2` and offsets in six directions that keep `y_n > 0`.
/// Covers both the boundary regime (`x_n ~ r`) and the near-diagonal one
/// (`x_n y_n >= 2 r^2`).
pub fn ray_samples(separations: &[f64]) -> Vec<(HalfSpacePoint, HalfSpacePoint)> {
    let dirs = [0.0, 0.25, 0.5, 0.75, -0.25, -0.5].map(|t| t * PI);
    let mut out = Vec::new();
    for &r in separations {
        for xn in [0.5 * r, r, 4.0 * r, 0.5] {
            let x = HalfSpacePoint::planar(0.0, xn);
            for &b in &dirs {
                let yn = xn + r * b.sin();
                if yn > 0.0 {
                    out.push((x.clone(), HalfSpacePoint::planar(r * b.cos(), yn)));
                }
            }
        }
    }
    out
}
