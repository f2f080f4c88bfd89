use std::f64::consts::PI;

use crate::error::{LakeError, Result};
use crate::geometry::{DefiningFunction, Point};

/// Collar coordinates near the shore: a boundary parameter `x'` (polar angle
/// about the star center) and an inward normal distance `x_n`.
#[derive(Debug, Clone)]
pub struct BoundaryChart {
    defining: DefiningFunction,
    delta: f64,
    reach: f64,
}

impl BoundaryChart {
    pub fn new(defining: DefiningFunction, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(LakeError::Configuration(format!("collar width must be positive, got {delta}")));
        }
        let c = defining.center();
        if defining.eval(c) <= 0.0 {
            return Err(LakeError::Configuration(
                "star center of the domain is not inside {phi > 0}".into(),
            ));
        }
        let b = defining.bbox();
        let reach = (b[0] - c[0])
            .abs()
            .max((b[1] - c[0]).abs())
            .hypot((b[2] - c[1]).abs().max((b[3] - c[1]).abs()));
        Ok(Self { defining, delta, reach })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn defining(&self) -> &DefiningFunction {
        &self.defining
    }

    /// Shore point hit by the ray from the star center at angle `x'`.
    pub fn gamma(&self, xp: f64) -> Result<Point> {
        let c = self.defining.center();
        let dir = [xp.cos(), xp.sin()];
        let at = |r: f64| [c[0] + r * dir[0], c[1] + r * dir[1]];
        let phi = |r: f64| self.defining.eval(at(r));

        // march outward to bracket the first sign change
        let steps = 256;
        let dr = self.reach / steps as f64;
        let mut lo = 0.0;
        let mut hi = None;
        for k in 1..=steps {
            let r = k as f64 * dr;
            if phi(r) <= 0.0 {
                hi = Some(r);
                break;
            }
            lo = r;
        }
        let mut hi = hi.ok_or_else(|| LakeError::Boundary {
            angle: xp,
            reason: "no shore crossing inside the bounding box".into(),
        })?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * self.reach {
                break;
            }
        }
        // Newton polish along the ray
        let mut r = 0.5 * (lo + hi);
        for _ in 0..3 {
            let g = self.defining.grad(at(r));
            let dphi = g[0] * dir[0] + g[1] * dir[1];
            if dphi == 0.0 {
                break;
            }
            let next = r - phi(r) / dphi;
            if (next - r).abs() > dr {
                break;
            }
            r = next;
        }
        Ok(at(r))
    }

    /// Unit inward normal `grad phi / |grad phi|` at the shore point for `x'`.
    pub fn normal(&self, xp: f64) -> Result<[f64; 2]> {
        let p = self.gamma(xp)?;
        let g = self.defining.grad(p);
        let n = g[0].hypot(g[1]);
        if n == 0.0 {
            return Err(LakeError::Boundary {
                angle: xp,
                reason: "grad phi vanishes on the shore".into(),
            });
        }
        Ok([g[0] / n, g[1] / n])
    }

    /// `gamma(x') + x_n nu(x')`.
    pub fn chart_point(&self, xp: f64, x_n: f64) -> Result<Point> {
        if !(0.0..=self.delta).contains(&x_n) {
            return Err(LakeError::OutOfCollar { x_n, delta: self.delta });
        }
        let g = self.gamma(xp)?;
        let nu = self.normal(xp)?;
        Ok([g[0] + x_n * nu[0], g[1] + x_n * nu[1]])
    }

    /// Smallest `|grad phi|` over `samples` equally spaced shore points.
    pub fn shore_gradient_min(&self, samples: usize) -> Result<f64> {
        let mut gmin = f64::INFINITY;
        for k in 0..samples.max(1) {
            let xp = 2.0 * PI * k as f64 / samples.max(1) as f64;
            let g = self.defining.grad(self.gamma(xp)?);
            gmin = gmin.min(g[0].hypot(g[1]));
        }
        Ok(gmin)
    }
}

pub fn chart_point(chart: &BoundaryChart, xp: f64, x_n: f64) -> Result<Point> {
    chart.chart_point(xp, x_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_chart() -> BoundaryChart {
        BoundaryChart::new(DefiningFunction::unit_disk(), 0.5).unwrap()
    }

    #[test]
    fn unit_circle_points() {
        let ch = disk_chart();
        let p = chart_point(&ch, 0.0, 0.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let q = chart_point(&ch, 0.0, 0.3).unwrap();
        assert!((q[0] - 0.7).abs() < 1e-12 && q[1].abs() < 1e-12);
    }

    #[test]
    fn out_of_collar_is_rejected() {
        let ch = disk_chart();
        assert!(matches!(ch.chart_point(0.0, 0.6), Err(LakeError::OutOfCollar { .. })));
        assert!(matches!(ch.chart_point(0.0, -0.1), Err(LakeError::OutOfCollar { .. })));
    }

    #[test]
    fn phi_grows_linearly_along_the_normal() {
        let ellipse = DefiningFunction::ellipse(1.5, 0.8).unwrap();
        let ch = BoundaryChart::new(ellipse.clone(), 0.2).unwrap();
        for k in 0..12 {
            let xp = 0.5 * k as f64;
            let g = ellipse.grad(ch.gamma(xp).unwrap());
            let gn = g[0].hypot(g[1]);
            assert!(ellipse.eval(ch.gamma(xp).unwrap()).abs() < 1e-12);
            for s in [1e-2, 5e-3, 2.5e-3, 1e-3] {
                let phi = ellipse.eval(ch.chart_point(xp, s).unwrap());
                // second-order remainder stays bounded as s shrinks
                let rem = (phi - s * gn).abs() / (s * s);
                assert!(rem < 10.0, "xp={xp} rem={rem}");
            }
        }
    }

    #[test]
    fn shore_gradient_on_disk_is_two() {
        let g = disk_chart().shore_gradient_min(64).unwrap();
        assert!((g - 2.0).abs() < 1e-10);
    }
}
