use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{LakeError, Result};
use crate::kernels::model::eval_e_eps;
use crate::kernels::{HalfSpacePoint, KernelParams};

/// Kernels for the `L^p` norm sweep, all planar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthKernel {
    Identity,
    /// `|x - y|^-1`.
    WeakSingular,
    /// `E^eps` itself.
    Truncated(KernelParams),
    /// Remainder of the frozen-coefficient parametrix for the coefficient
    /// field `p(x) = I + kappa x_1 e_1 e_1^t` with matched lower-order
    /// terms: `K^eps(x, y) = kappa x_n (y_1 - x_1) d_{x_1}^2 E^eps(x, y)`.
    Remainder { params: KernelParams, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub p: Vec<f64>,
    /// Largest observed `|T g|_p / |g|_p` for each `p`.
    pub norms: Vec<f64>,
    /// Least-squares slope of `ln norm` against `ln p`.
    pub slope: f64,
    /// `slope <= 1.2`.
    pub at_most_linear: bool,
}

/// Side of the sample box `[-1/2, 1/2] x [0, 1]` is split into `m` cells.
fn cloud(m: usize) -> (Vec<HalfSpacePoint>, f64) {
    let h = 1.0 / m as f64;
    let mut pts = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            pts.push(HalfSpacePoint::planar(-0.5 + (i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
        }
    }
    (pts, h)
}

fn kernel_value(kernel: &GrowthKernel, x: &HalfSpacePoint, y: &HalfSpacePoint, h: f64) -> Result<f64> {
    match kernel {
        GrowthKernel::Identity => Ok(0.0),
        GrowthKernel::WeakSingular => {
            let r = x.distance(y);
            // self-cell: mean of |z|^-1 over a square of side h is 4 ln(1 + sqrt 2) / h
            Ok(if r == 0.0 { 4.0 * (1.0 + 2f64.sqrt()).ln() / h } else { 1.0 / r })
        }
        GrowthKernel::Truncated(p) => eval_e_eps(p, x, y),
        GrowthKernel::Remainder { params, kappa } => {
            let d = x.tangential[0] - y.tangential[0];
            if d == 0.0 {
                return Ok(0.0);
            }
            let s = (1e-2 * x.distance(y)).max(1e-4);
            let e0 = eval_e_eps(params, x, y)?;
            let ep = eval_e_eps(params, &x.shifted(0, s), y)?;
            let em = eval_e_eps(params, &x.shifted(0, -s), y)?;
            Ok(-kappa * x.normal * d * (ep - 2.0 * e0 + em) / (s * s))
        }
    }
}

fn lp_norm(v: &[f64], area: f64, p: f64) -> f64 {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * (v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>() * area).powf(1.0 / p)
}

/// Sweeps `|T g|_p / |g|_p` over random test functions on an `m x m` cloud.
/// Test functions mix random signs, smooth random modes and narrow bumps.
pub fn operator_norm_growth(
    kernel: &GrowthKernel,
    p_list: &[f64],
    m: usize,
    n_tests: usize,
    seed: u64,
) -> Result<GrowthReport> {
    if p_list.len() < 2 || p_list.iter().any(|p| !(2.0..=64.0).contains(p)) {
        return Err(LakeError::Precondition("need at least two exponents in [2, 64]".into()));
    }
    if m < 2 || n_tests == 0 {
        return Err(LakeError::Precondition("need m >= 2 and at least one test function".into()));
    }
    if let GrowthKernel::Truncated(p) | GrowthKernel::Remainder { params: p, .. } = kernel {
        if p.n != 2 {
            return Err(LakeError::Precondition("norm sweep is planar".into()));
        }
    }
    let (pts, h) = cloud(m);
    let area = h * h;
    let npts = pts.len();
    let matrix: Vec<Vec<f64>> = if matches!(kernel, GrowthKernel::Identity) {
        Vec::new()
    } else {
        pts.par_iter()
            .map(|x| pts.iter().map(|y| Ok(kernel_value(kernel, x, y, h)? * area)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?
    };
    let apply = |g: &[f64]| -> Vec<f64> {
        if matrix.is_empty() {
            return g.to_vec();
        }
        matrix.iter().map(|row| row.iter().zip(g).map(|(k, v)| k * v).sum()).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tests: Vec<Vec<f64>> = Vec::with_capacity(n_tests);
    for t in 0..n_tests {
        let g: Vec<f64> = match t % 3 {
            0 => (0..npts).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect(),
            1 => {
                let (kx, ky, ph): (f64, f64, f64) = (rng.gen_range(1.0..6.0), rng.gen_range(1.0..6.0), rng.gen_range(0.0..6.3));
                pts.iter().map(|z| (kx * z.tangential[0] + ph).sin() * (ky * z.normal).cos()).collect()
            }
            _ => {
                let c = rng.gen_range(0..npts);
                let w = rng.gen_range(1.0..3.0) * h;
                pts.iter().map(|z| (-z.distance_sq(&pts[c]) / (w * w)).exp()).collect()
            }
        };
        tests.push(g);
    }
    let images: Vec<Vec<f64>> = tests.iter().map(|g| apply(g)).collect();
    let norms: Vec<f64> = p_list
        .iter()
        .map(|&p| {
            tests
                .iter()
                .zip(&images)
                .map(|(g, tg)| {
                    let d = lp_norm(g, area, p);
                    if d > 0.0 {
                        lp_norm(tg, area, p) / d
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let lx: Vec<f64> = p_list.iter().map(|p| p.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(GrowthReport { p: p_list.to_vec(), norms, slope, at_most_linear: slope <= 1.2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 64.0];

    #[test]
    fn identity_has_unit_norm() {
        let r = operator_norm_growth(&GrowthKernel::Identity, &PS, 8, 6, 1).unwrap();
        assert!(r.norms.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(r.slope.abs() < 1e-12);
    }

    #[test]
    fn weak_singular_kernel_is_uniformly_bounded() {
        let r = operator_norm_growth(&GrowthKernel::WeakSingular, &PS, 16, 9, 2).unwrap();
        assert!(r.slope.abs() < 0.2, "{r:?}");
        assert!(r.at_most_linear);
    }

    #[test]
    fn remainder_kernel_grows_at_most_linearly() {
        let params = KernelParams::new(1.0, 2, 2.0 / std::f64::consts::PI, 0.05).unwrap();
        let r = operator_norm_growth(&GrowthKernel::Remainder { params, kappa: 1.0 }, &PS, 8, 6, 3).unwrap();
        assert!(r.at_most_linear, "{r:?}");
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = operator_norm_growth(&GrowthKernel::WeakSingular, &PS, 8, 4, 11).unwrap();
        let b = operator_norm_growth(&GrowthKernel::WeakSingular, &PS, 8, 4, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponents_out_of_range_are_rejected() {
        assert!(operator_norm_growth(&GrowthKernel::Identity, &[1.0, 2.0], 4, 1, 0).is_err());
    }
}
