use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{LakeError, Result};
use crate::geometry::{DepthLaw, Grid, OFFSETS};

/// Lower bound on the wet fraction of a shore face.
const MIN_THETA: f64 = 1e-3;

/// Matrix-free `u -> div_h((1/b) grad_h u)` on the interior cells with zero
/// Dirichlet data on the shore.
///
/// Each face weight is the harmonic mean of `1/b` over the segment joining
/// the two centers, with `phi` taken linear along it; for `a = 1` this is
/// `2 / (b_P + b_N)`. Across a shore face the
/// zero is placed where the linear interpolant of `phi` between the two
/// centers vanishes, at fraction `theta` of the spacing, and the weight is
/// the exact harmonic mean of `1/b` over that wet segment:
/// `(a+1) / (theta b_P)` for the power law, `1 / theta` for unit depth.
/// At `theta = 1/2` the unit-depth closure is the half-cell ghost `-u_P`.
#[derive(Debug, Clone)]
pub struct WeightedOperator {
    grid: Arc<Grid>,
    /// Coefficient of `u_N` for each neighbor slot; zero when the neighbor is
    /// a ghost.
    offdiag: Vec<[f64; 4]>,
    /// Positive diagonal magnitude: `(A u)_P = (sum offdiag*u_N - diag*u_P) / h^2`.
    diag: Vec<f64>,
}

/// Mean of `b` over a grid segment on which `phi` is linear between the
/// end values: `(phi_q^(a+1) - phi_p^(a+1)) / ((a+1)(phi_q - phi_p))`.
fn segment_mean_depth(law: DepthLaw, a1: f64, phi_p: f64, phi_q: f64) -> f64 {
    match law {
        DepthLaw::Unit => 1.0,
        DepthLaw::Power => {
            let (lo, hi) = if phi_p < phi_q { (phi_p, phi_q) } else { (phi_q, phi_p) };
            if hi - lo <= 1e-8 * hi {
                (0.5 * (lo + hi)).powf(a1 - 1.0)
            } else {
                (hi.powf(a1) - lo.powf(a1)) / (a1 * (hi - lo))
            }
        }
    }
}

impl WeightedOperator {
    /// Assemble with cell depths `b + offset`. `offset = 0` is the physical
    /// operator; a positive offset gives the `1/(b + eps)` variant.
    pub fn assemble(grid: Arc<Grid>, offset: f64) -> Result<Self> {
        let depth = grid.depth();
        if let Some(k) = depth.iter().position(|&b| !(b + offset > 0.0) || !b.is_finite()) {
            let c = grid.centers()[k];
            return Err(LakeError::Assembly(format!(
                "depth {} at interior cell ({:.6}, {:.6}) is not positive",
                depth[k], c[0], c[1]
            )));
        }
        let a1 = grid.exponent() + 1.0;
        let h = grid.h();
        let profile = grid.profile();
        let (offdiag, diag): (Vec<[f64; 4]>, Vec<f64>) = grid
            .neighbors()
            .iter()
            .enumerate()
            .map(|(p, nb)| {
                let mut off = [0.0; 4];
                let mut d = 0.0;
                for (slot, n) in nb.iter().enumerate() {
                    match n {
                        Some(q) => {
                            let w = 1.0 / (segment_mean_depth(profile.law(), a1, grid.phi()[p], grid.phi()[*q]) + offset);
                            off[slot] = w;
                            d += w;
                        }
                        None => {
                            let c = grid.centers()[p];
                            let (di, dj) = OFFSETS[slot];
                            let phi_p = grid.phi()[p];
                            let phi_g = profile.phi([c[0] + di as f64 * h, c[1] + dj as f64 * h]);
                            let theta = if phi_g < phi_p { (phi_p / (phi_p - phi_g)).clamp(MIN_THETA, 1.0) } else { 1.0 };
                            let mean_b = match profile.law() {
                                DepthLaw::Power => depth[p] / a1,
                                DepthLaw::Unit => 1.0,
                            } + offset;
                            d += 1.0 / (theta * mean_b);
                        }
                    }
                }
                (off, d)
            })
            .unzip();
        Ok(Self { grid, offdiag, diag })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Diagonal entries of the operator (negative).
    pub fn diagonal(&self) -> Vec<f64> {
        let h2 = self.grid.cell_area();
        self.diag.iter().map(|d| -d / h2).collect()
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let h2 = self.grid.cell_area();
        let nbs = self.grid.neighbors();
        out.par_iter_mut().enumerate().for_each(|(p, o)| {
            let mut s = -self.diag[p] * u[p];
            for (slot, n) in nbs[p].iter().enumerate() {
                if let Some(q) = n {
                    s += self.offdiag[p][slot] * u[*q];
                }
            }
            *o = s / h2;
        });
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        out
    }

    /// Discrete Dirichlet energy `1/2 <(1/b) grad u, grad u>` (cell-area weighted).
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        let au = self.apply(u);
        -0.5 * crate::numeric::dot(u, &au) * self.grid.cell_area()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DefiningFunction, DepthProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(a: f64, h: f64) -> Arc<Grid> {
        Arc::new(build_grid(&DepthProfile::new(DefiningFunction::unit_disk(), a).unwrap(), h).unwrap())
    }

    #[test]
    fn unit_depth_is_the_five_point_laplacian_with_shore_crossing() {
        let profile = DepthProfile::new(DefiningFunction::unit_disk(), 1.0).unwrap().with_unit_depth();
        let g = Arc::new(build_grid(&profile, 1.0 / 16.0).unwrap());
        let op = WeightedOperator::assemble(g.clone(), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let au = op.apply(&u);
        let h2 = g.cell_area();
        for p in 0..g.len() {
            let c = g.centers()[p];
            let mut s = -4.0 * u[p];
            for (slot, n) in g.neighbors()[p].iter().enumerate() {
                s += match n {
                    Some(q) => u[*q],
                    None => {
                        // zero at the crossing, fraction theta of the way to the ghost center
                        let (di, dj) = OFFSETS[slot];
                        let q = [c[0] + di as f64 / 16.0, c[1] + dj as f64 / 16.0];
                        let (rp, rq) = (c[0].hypot(c[1]), q[0].hypot(q[1]));
                        let theta = (1.0 - rp * rp) / (rq * rq - rp * rp);
                        u[p] - u[p] / theta
                    }
                };
            }
            assert!((au[p] - s / h2).abs() < 1e-9 * (1.0 + s.abs() / h2));
        }
    }

    #[test]
    fn constant_field_is_annihilated_away_from_shore() {
        let g = grid(1.0, 1.0 / 32.0);
        let op = WeightedOperator::assemble(g.clone(), 0.0).unwrap();
        let au = op.apply(&vec![1.0; g.len()]);
        for (p, nb) in g.neighbors().iter().enumerate() {
            if nb.iter().all(|n| n.is_some()) {
                assert!(au[p].abs() < 1e-9, "cell {p}: {}", au[p]);
            }
        }
    }

    #[test]
    fn operator_is_symmetric() {
        for a in [0.5, 1.0, 2.0] {
            let g = grid(a, 1.0 / 24.0);
            let op = WeightedOperator::assemble(g.clone(), 0.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let u: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = crate::numeric::dot(&op.apply(&u), &w);
            let r = crate::numeric::dot(&u, &op.apply(&w));
            assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()), "a={a}: {l} vs {r}");
            // negative definite
            assert!(crate::numeric::dot(&op.apply(&u), &u) < 0.0);
        }
    }
}
