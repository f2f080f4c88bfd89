use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{LakeError, Result};
use crate::geometry::{Grid, Point, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub quotient: f64,
    pub pairs: usize,
}

/// `n` pairs of distinct points where bilinear interpolation is defined,
/// drawn uniformly from the bounding box by rejection.
pub fn sample_pairs(grid: &Grid, n: usize, seed: u64) -> Vec<(Point, Point)> {
    let (nx, ny) = grid.dims();
    let o = grid.origin();
    let (wx, wy) = (nx as f64 * grid.h(), ny as f64 * grid.h());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| loop {
        let p = [o[0] + rng.gen::<f64>() * wx, o[1] + rng.gen::<f64>() * wy];
        if grid.bilinear(p).is_some() {
            return p;
        }
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        if a != b {
            out.push((a, b));
        }
    }
    out
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(LakeError::Precondition(format!("Hölder exponent must lie in (0, 1), got {mu}")))
    }
}

fn quotient_over<F>(diff: F, mu: f64, pairs: &[(Point, Point)]) -> Result<HolderEstimate>
where
    F: Fn(Point, Point) -> Option<f64> + Sync,
{
    check_mu(mu)?;
    let q = pairs
        .par_iter()
        .map(|&(a, b)| {
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            if d == 0.0 {
                return Ok(0.0);
            }
            diff(a, b)
                .map(|v| v / d.powf(mu))
                .ok_or_else(|| LakeError::Precondition(format!("pair ({a:?}, {b:?}) is not interpolable")))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(HolderEstimate { exponent: mu, quotient: q, pairs: pairs.len() })
}

/// `max |u(x) - u(y)| / |x - y|^mu` over the given pairs.
pub fn holder_quotient_pairs(field: &ScalarField, mu: f64, pairs: &[(Point, Point)]) -> Result<HolderEstimate> {
    quotient_over(|a, b| Some((field.interpolate(a)? - field.interpolate(b)?).abs()), mu, pairs)
}

/// Quotient over `n_pairs` random interior pairs with a fixed seed.
pub fn holder_quotient(field: &ScalarField, mu: f64, n_pairs: usize, seed: u64) -> Result<HolderEstimate> {
    check_mu(mu)?;
    holder_quotient_pairs(field, mu, &sample_pairs(field.grid(), n_pairs, seed))
}

/// Vector version with the Euclidean norm of the difference.
pub fn holder_quotient_vector(field: &VectorField, mu: f64, n_pairs: usize, seed: u64) -> Result<HolderEstimate> {
    check_mu(mu)?;
    let pairs = sample_pairs(field.grid(), n_pairs, seed);
    quotient_over(
        |a, b| {
            let (u, w) = (field.interpolate(a)?, field.interpolate(b)?);
            Some((u[0] - w[0]).hypot(u[1] - w[1]))
        },
        mu,
        &pairs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{solve, SolveOptions, WeightedPoissonProblem};
    use crate::geometry::{build_grid, DefiningFunction, DepthProfile};
    use std::sync::Arc;

    fn disk(h: f64) -> Arc<Grid> {
        Arc::new(build_grid(&DepthProfile::new(DefiningFunction::unit_disk(), 1.0).unwrap(), h).unwrap())
    }

    #[test]
    fn constant_field_has_zero_quotient() {
        let g = disk(1.0 / 16.0);
        let e = holder_quotient(&ScalarField::from_fn(g, |_| 3.0), 0.5, 1000, 1).unwrap();
        assert!(e.quotient < 1e-13, "{e:?}");
    }

    #[test]
    fn linear_field_on_a_diameter() {
        let g = disk(1.0 / 64.0);
        let u = ScalarField::from_fn(g.clone(), |c| c[0]);
        let r = 0.95;
        let e = holder_quotient_pairs(&u, 0.5, &[([-r, 0.0], [r, 0.0])]).unwrap();
        assert!((e.quotient - (2.0 * r).sqrt()).abs() < 1e-12);
        let rnd = holder_quotient(&u, 0.5, 20_000, 7).unwrap();
        assert!(rnd.quotient <= 2f64.sqrt() && rnd.quotient > 1.2, "{rnd:?}");
    }

    #[test]
    fn monotone_in_pairs_and_homogeneous() {
        let g = disk(1.0 / 32.0);
        let u = ScalarField::from_fn(g.clone(), |c| (3.0 * c[0]).sin() * c[1]);
        let pairs = sample_pairs(&g, 2000, 3);
        let small = holder_quotient_pairs(&u, 0.3, &pairs[..500]).unwrap();
        let big = holder_quotient_pairs(&u, 0.3, &pairs).unwrap();
        assert!(big.quotient >= small.quotient);
        let scaled = holder_quotient_pairs(&u.scaled(-2.0), 0.3, &pairs).unwrap();
        assert!((scaled.quotient - 2.0 * big.quotient).abs() < 1e-12 * big.quotient);
    }

    #[test]
    fn velocity_quotient_is_stable_under_refinement() {
        let mu = 0.5;
        let q: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&h| {
                let g = disk(h);
                let prob = WeightedPoissonProblem::from_fn(g, |c| if c[0] > 0.1 { -1.0 } else { 0.5 }).unwrap();
                let sol = solve(&prob, &SolveOptions::default()).unwrap();
                holder_quotient_vector(&sol.velocity, mu, 20_000, 5).unwrap().quotient
            })
            .collect();
        assert!((q[1] / q[0] - 1.0).abs() < 0.2, "{q:?}");
    }

    #[test]
    fn exponent_must_be_in_unit_interval() {
        let g = disk(1.0 / 8.0);
        assert!(holder_quotient(&ScalarField::zeros(g), 1.0, 10, 0).is_err());
    }
}
