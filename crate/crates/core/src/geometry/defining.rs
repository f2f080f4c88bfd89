use serde::{Deserialize, Serialize};

use crate::error::{LakeError, Result};
use crate::geometry::Point;

/// Bivariate polynomial `sum c * x^i * y^j`, kept in monomial form so value,
/// gradient and Hessian are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub px: u32,
    pub py: u32,
    pub coeff: f64,
}

fn ipow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        let terms = terms.into_iter().filter(|m| m.coeff != 0.0).collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coeff * ipow(p[0], m.px) * ipow(p[1], m.py))
            .sum()
    }

    pub fn grad(&self, p: Point) -> [f64; 2] {
        let mut g = [0.0; 2];
        for m in &self.terms {
            if m.px > 0 {
                g[0] += m.coeff * m.px as f64 * ipow(p[0], m.px - 1) * ipow(p[1], m.py);
            }
            if m.py > 0 {
                g[1] += m.coeff * m.py as f64 * ipow(p[0], m.px) * ipow(p[1], m.py - 1);
            }
        }
        g
    }

    pub fn hess(&self, p: Point) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for m in &self.terms {
            let (i, j) = (m.px, m.py);
            let c = m.coeff;
            if i > 1 {
                h[0][0] += c * (i * (i - 1)) as f64 * ipow(p[0], i - 2) * ipow(p[1], j);
            }
            if j > 1 {
                h[1][1] += c * (j * (j - 1)) as f64 * ipow(p[0], i) * ipow(p[1], j - 2);
            }
            if i > 0 && j > 0 {
                h[0][1] += c * (i * j) as f64 * ipow(p[0], i - 1) * ipow(p[1], j - 1);
            }
        }
        h[1][0] = h[0][1];
        h
    }
}

/// Analytic shore function: the lake is `{phi > 0}` and the shore is its zero
/// level set. Only polynomial `phi` are supported so manufactured solutions can
/// use exact derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefiningFunction {
    name: String,
    poly: Polynomial,
    /// Point from which the shore is star-shaped; used by the boundary chart.
    center: Point,
    /// Default bounding box `[x0, x1, y0, y1]`.
    bbox: [f64; 4],
}

impl DefiningFunction {
    /// `phi = 1 - (x^2 + y^2) / R^2`.
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LakeError::Configuration(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        let k = 1.0 / (radius * radius);
        let poly = Polynomial::new(vec![
            Monomial { px: 0, py: 0, coeff: 1.0 },
            Monomial { px: 2, py: 0, coeff: -k },
            Monomial { px: 0, py: 2, coeff: -k },
        ]);
        let r = 1.1 * radius;
        Ok(Self {
            name: if radius == 1.0 { "unit-disk".into() } else { format!("disk(r={radius})") },
            poly,
            center: [0.0, 0.0],
            bbox: [-r, r, -r, r],
        })
    }

    pub fn unit_disk() -> Self {
        Self::disk(1.0).expect("unit radius is valid")
    }

    /// `phi = 1 - x^2/A^2 - y^2/B^2`.
    pub fn ellipse(semi_x: f64, semi_y: f64) -> Result<Self> {
        if !(semi_x > 0.0 && semi_y > 0.0 && semi_x.is_finite() && semi_y.is_finite()) {
            return Err(LakeError::Configuration(format!(
                "ellipse semi-axes must be positive, got ({semi_x}, {semi_y})"
            )));
        }
        let poly = Polynomial::new(vec![
            Monomial { px: 0, py: 0, coeff: 1.0 },
            Monomial { px: 2, py: 0, coeff: -1.0 / (semi_x * semi_x) },
            Monomial { px: 0, py: 2, coeff: -1.0 / (semi_y * semi_y) },
        ]);
        let (rx, ry) = (1.1 * semi_x, 1.1 * semi_y);
        Ok(Self {
            name: format!("ellipse({semi_x},{semi_y})"),
            poly,
            center: [0.0, 0.0],
            bbox: [-rx, rx, -ry, ry],
        })
    }

    pub fn polynomial(poly: Polynomial, center: Point, bbox: [f64; 4]) -> Result<Self> {
        if !(bbox[0] < bbox[1] && bbox[2] < bbox[3]) {
            return Err(LakeError::Configuration(format!("degenerate bounding box {bbox:?}")));
        }
        Ok(Self { name: "polynomial".into(), poly, center, bbox })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn with_bbox(mut self, bbox: [f64; 4]) -> Self {
        self.bbox = bbox;
        self
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.poly.eval(p)
    }

    pub fn grad(&self, p: Point) -> [f64; 2] {
        self.poly.grad(p)
    }

    pub fn hess(&self, p: Point) -> [[f64; 2]; 2] {
        self.poly.hess(p)
    }
}

/// How the depth is derived from `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthLaw {
    /// `b = phi^a`, vanishing at the shore.
    Power,
    /// `b = 1` inside the lake; nondegenerate sanity reference.
    Unit,
}

/// Degenerate depth `b = max(phi, 0)^a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthProfile {
    defining: DefiningFunction,
    exponent: f64,
    law: DepthLaw,
}

impl DepthProfile {
    pub fn new(defining: DefiningFunction, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(LakeError::Configuration(format!(
                "depth exponent a must be positive, got {exponent}"
            )));
        }
        Ok(Self { defining, exponent, law: DepthLaw::Power })
    }

    /// Same domain with `b = 1` inside.
    pub fn with_unit_depth(mut self) -> Self {
        self.law = DepthLaw::Unit;
        self
    }

    pub fn defining(&self) -> &DefiningFunction {
        &self.defining
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn law(&self) -> DepthLaw {
        self.law
    }

    pub fn phi(&self, p: Point) -> f64 {
        self.defining.eval(p)
    }

    /// Depth at `p`; zero outside the lake.
    pub fn eval_depth(&self, p: Point) -> f64 {
        self.depth_from_phi(self.defining.eval(p))
    }

    pub fn depth_from_phi(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return 0.0;
        }
        match self.law {
            DepthLaw::Power => phi.powf(self.exponent),
            DepthLaw::Unit => 1.0,
        }
    }
}

/// Free-function form of [`DepthProfile::eval_depth`].
pub fn eval_depth(profile: &DepthProfile, x: Point) -> f64 {
    profile.eval_depth(x)
}
