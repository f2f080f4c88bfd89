use crate::error::{LakeError, Result};
use crate::geometry::{BoundaryChart, DepthLaw, DepthProfile, Point};

/// Neighbor slots in `Grid::neighbors`: east, west, north, south.
pub const EAST: usize = 0;
pub const WEST: usize = 1;
pub const NORTH: usize = 2;
pub const SOUTH: usize = 3;
pub const OFFSETS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

const EXTERIOR: u32 = u32::MAX;

/// Uniform cell-centered grid over the bounding box with an interior mask
/// `{phi(center) > 0}`. Unknowns live on interior cells only, numbered in
/// row-major order (x fastest).
#[derive(Debug, Clone)]
pub struct Grid {
    profile: DepthProfile,
    origin: Point,
    h: f64,
    nx: usize,
    ny: usize,
    index: Vec<u32>,
    cells: Vec<(usize, usize)>,
    centers: Vec<Point>,
    phi: Vec<f64>,
    depth: Vec<f64>,
    mean_depth: Vec<f64>,
    neighbors: Vec<[Option<usize>; 4]>,
    shore_gradient_min: f64,
}

impl Grid {
    pub fn build(profile: &DepthProfile, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(LakeError::Configuration(format!("grid spacing must be positive, got {h}")));
        }
        let bbox = profile.defining().bbox();
        let nx = ((bbox[1] - bbox[0]) / h).ceil() as usize;
        let ny = ((bbox[3] - bbox[2]) / h).ceil() as usize;
        if nx == 0 || ny == 0 || nx.saturating_mul(ny) > (EXTERIOR as usize) {
            return Err(LakeError::Configuration(format!("unusable grid size {nx}x{ny}")));
        }
        let origin = [bbox[0], bbox[2]];
        let mut index = vec![EXTERIOR; nx * ny];
        let mut cells = Vec::new();
        let mut centers = Vec::new();
        let mut phi = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let c = [origin[0] + (i as f64 + 0.5) * h, origin[1] + (j as f64 + 0.5) * h];
                let v = profile.phi(c);
                if v > 0.0 {
                    index[j * nx + i] = cells.len() as u32;
                    cells.push((i, j));
                    centers.push(c);
                    phi.push(v);
                }
            }
        }
        if cells.is_empty() {
            return Err(LakeError::EmptyInterior);
        }
        let depth = phi.iter().map(|&p| profile.depth_from_phi(p)).collect();
        let mean_depth = centers.iter().map(|&c| cell_mean_depth(profile, c, h)).collect();
        let lookup = |i: i64, j: i64| -> Option<usize> {
            if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                return None;
            }
            let k = index[j as usize * nx + i as usize];
            (k != EXTERIOR).then_some(k as usize)
        };
        let neighbors = cells
            .iter()
            .map(|&(i, j)| {
                let mut nb = [None; 4];
                for (slot, (di, dj)) in OFFSETS.iter().enumerate() {
                    nb[slot] = lookup(i as i64 + di, j as i64 + dj);
                }
                nb
            })
            .collect();
        let chart = BoundaryChart::new(profile.defining().clone(), 5.0 * h)?;
        let shore_gradient_min = chart.shore_gradient_min(720)?;
        if !(shore_gradient_min > 0.0) {
            return Err(LakeError::Configuration("grad phi vanishes somewhere on the shore".into()));
        }
        Ok(Self {
            profile: profile.clone(),
            origin,
            h,
            nx,
            ny,
            index,
            cells,
            centers,
            phi,
            depth,
            mean_depth,
            neighbors,
            shore_gradient_min,
        })
    }

    pub fn profile(&self) -> &DepthProfile {
        &self.profile
    }

    pub fn exponent(&self) -> f64 {
        self.profile.exponent()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    /// `phi` at interior cell centers (all strictly positive).
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `b` at interior cell centers.
    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    /// Cell average of `b` (zero on the dry part of the cell), sampled on a
    /// 7x7 midpoint lattice that includes the center. Equals 1 for unit depth.
    pub fn mean_depth(&self) -> &[f64] {
        &self.mean_depth
    }

    pub fn neighbors(&self) -> &[[Option<usize>; 4]] {
        &self.neighbors
    }

    /// Interior index of lattice cell `(i, j)`, if masked.
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        let k = self.index[j as usize * self.nx + i as usize];
        (k != EXTERIOR).then_some(k as usize)
    }

    pub fn shore_gradient_min(&self) -> f64 {
        self.shore_gradient_min
    }

    /// Default boundary chart with collar width of five cells.
    pub fn chart(&self) -> Result<BoundaryChart> {
        BoundaryChart::new(self.profile.defining().clone(), 5.0 * self.h)
    }

    /// True when the two grids discretize the same lake identically.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.h == other.h
            && self.origin == other.origin
            && self.cells == other.cells
    }

    /// Bilinear interpolation weights of the four surrounding cell centers,
    /// or `None` if any of them is outside the mask.
    pub fn bilinear(&self, p: Point) -> Option<[(usize, f64); 4]> {
        let sx = (p[0] - self.origin[0]) / self.h - 0.5;
        let sy = (p[1] - self.origin[1]) / self.h - 0.5;
        if !(sx.is_finite() && sy.is_finite()) {
            return None;
        }
        let i0 = sx.floor() as i64;
        let j0 = sy.floor() as i64;
        let tx = sx - i0 as f64;
        let ty = sy - j0 as f64;
        let c00 = self.index_of(i0, j0)?;
        let c10 = self.index_of(i0 + 1, j0)?;
        let c01 = self.index_of(i0, j0 + 1)?;
        let c11 = self.index_of(i0 + 1, j0 + 1)?;
        Some([
            (c00, (1.0 - tx) * (1.0 - ty)),
            (c10, tx * (1.0 - ty)),
            (c01, (1.0 - tx) * ty),
            (c11, tx * ty),
        ])
    }
}

const MEAN_SAMPLES: usize = 7;

fn cell_mean_depth(profile: &DepthProfile, c: Point, h: f64) -> f64 {
    if profile.law() == DepthLaw::Unit {
        return 1.0;
    }
    let m = MEAN_SAMPLES as f64;
    let mut s = 0.0;
    for j in 0..MEAN_SAMPLES {
        for i in 0..MEAN_SAMPLES {
            let x = c[0] + h * ((i as f64 + 0.5) / m - 0.5);
            let y = c[1] + h * ((j as f64 + 0.5) / m - 0.5);
            s += profile.eval_depth([x, y]);
        }
    }
    s / (m * m)
}

pub fn build_grid(profile: &DepthProfile, h: f64) -> Result<Grid> {
    Grid::build(profile, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DefiningFunction, Monomial, Polynomial};
    use std::f64::consts::PI;

    fn disk(a: f64) -> DepthProfile {
        DepthProfile::new(DefiningFunction::unit_disk(), a).unwrap()
    }

    #[test]
    fn coarse_mask_lies_inside_the_disk() {
        let g = build_grid(&disk(1.0), 0.5).unwrap();
        assert!(!g.is_empty());
        for c in g.centers() {
            assert!(c[0].hypot(c[1]) < 1.0);
        }
    }

    #[test]
    fn masked_area_approaches_pi() {
        let g = build_grid(&disk(1.0), 1.0 / 128.0).unwrap();
        let area = g.len() as f64 * g.cell_area();
        assert!((area - PI).abs() / PI < 0.02, "area {area}");
    }

    #[test]
    fn mean_depth_integrates_b() {
        // int_disk (1 - r^2)^a = pi / (a + 1)
        for a in [0.5, 1.0, 2.0] {
            let g = build_grid(&disk(a), 1.0 / 64.0).unwrap();
            assert!(g.mean_depth().iter().all(|m| *m > 0.0));
            let total: f64 = g.mean_depth().iter().sum::<f64>() * g.cell_area();
            let exact = PI / (a + 1.0);
            assert!((total - exact).abs() / exact < 2e-3, "a={a}: {total} vs {exact}");
        }
    }

    #[test]
    fn empty_interior_is_an_error() {
        let poly = Polynomial::new(vec![Monomial { px: 0, py: 0, coeff: -1.0 }]);
        let def = DefiningFunction::polynomial(poly, [0.0, 0.0], [-1.0, 1.0, -1.0, 1.0]).unwrap();
        let profile = DepthProfile::new(def, 1.0).unwrap();
        assert!(matches!(build_grid(&profile, 0.1), Err(LakeError::EmptyInterior)));
    }

    #[test]
    fn depth_positive_on_mask_and_build_is_deterministic() {
        let p = disk(2.0);
        let g1 = build_grid(&p, 1.0 / 32.0).unwrap();
        let g2 = build_grid(&p, 1.0 / 32.0).unwrap();
        assert!(g1.same_layout(&g2));
        assert!(g1.depth().iter().all(|&b| b > 0.0));
        let (nx, ny) = g1.dims();
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                let c = [
                    g1.origin()[0] + (i as f64 + 0.5) * g1.h(),
                    g1.origin()[1] + (j as f64 + 0.5) * g1.h(),
                ];
                if p.phi(c) <= 0.0 {
                    assert!(g1.index_of(i, j).is_none());
                    assert_eq!(p.eval_depth(c), 0.0);
                }
            }
        }
    }

    #[test]
    fn bilinear_weights_reproduce_linear_functions() {
        let g = build_grid(&disk(1.0), 1.0 / 16.0).unwrap();
        let f = |p: Point| 2.0 * p[0] - 0.5 * p[1] + 0.25;
        let vals: Vec<f64> = g.centers().iter().map(|&c| f(c)).collect();
        let q = [0.123, -0.31];
        let w = g.bilinear(q).unwrap();
        let s: f64 = w.iter().map(|&(k, wk)| wk * vals[k]).sum();
        assert!((s - f(q)).abs() < 1e-13);
        assert!(g.bilinear([0.999, 0.0]).is_none());
    }
}
