use crate::error::{LakeError, Result};

/// Function sampled on `0 = x_0 < x_1 < ... < x_m = delta`, interpolated
/// by local cubics through four neighboring nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled1d {
    x: Vec<f64>,
    values: Vec<f64>,
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

impl Sampled1d {
    pub fn new(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if x.len() != values.len() {
            return Err(LakeError::Precondition("abscissae and values differ in length".into()));
        }
        if x.len() < 4 {
            return Err(LakeError::Precondition("need at least four samples".into()));
        }
        if x[0] != 0.0 || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LakeError::Precondition("abscissae must start at 0 and increase strictly".into()));
        }
        Ok(Self { x, values })
    }

    /// `m + 1` equispaced samples of `f` on `[0, delta]`.
    pub fn uniform(delta: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(LakeError::Precondition(format!("interval length must be positive, got {delta}")));
        }
        let x: Vec<f64> = (0..=m).map(|k| delta * k as f64 / m as f64).collect();
        let v = x.iter().map(|&t| f(t)).collect();
        Self::new(x, v)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { x: self.x.clone(), values }
    }

    /// First of the four stencil nodes used on cell `[x_k, x_k+1]`.
    fn stencil(&self, k: usize) -> usize {
        k.saturating_sub(1).min(self.x.len() - 4)
    }

    fn interp_cell(&self, k: usize, t: f64) -> f64 {
        let s = self.stencil(k);
        let xs = &self.x[s..s + 4];
        let vs = &self.values[s..s + 4];
        let mut acc = 0.0;
        for i in 0..4 {
            let mut l = 1.0;
            for j in 0..4 {
                if j != i {
                    l *= (t - xs[j]) / (xs[i] - xs[j]);
                }
            }
            acc += l * vs[i];
        }
        acc
    }

    pub fn interpolate(&self, t: f64) -> f64 {
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.values[i],
            Err(0) => 0,
            Err(i) => (i - 1).min(self.x.len() - 2),
        };
        self.interp_cell(k, t)
    }

    /// `int_{x_k}^{x_k+1} t^w u(t) dt` for every cell. The first cell is
    /// integrated exactly against the cubic (needs `w > -1`); the others
    /// use 8-point Gauss-Legendre.
    fn cell_integrals(&self, w: f64) -> Vec<f64> {
        let m = self.x.len() - 1;
        let mut out = Vec::with_capacity(m);
        out.push(if w > -1.0 { self.first_cell_moment(w) } else { f64::NAN });
        for k in 1..m {
            let (a, b) = (self.x[k], self.x[k + 1]);
            let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
            let s: f64 = GAUSS8
                .iter()
                .map(|&(z, wt)| {
                    let t = c + r * z;
                    wt * t.powf(w) * self.interp_cell(k, t)
                })
                .sum();
            out.push(r * s);
        }
        out
    }

    /// `int_0^{x_1} t^w p(t) dt` with `p` the cubic through nodes 0..3,
    /// written in the monomial basis of `s = t / x_1`.
    fn first_cell_moment(&self, w: f64) -> f64 {
        let x1 = self.x[1];
        let s: Vec<f64> = self.x[..4].iter().map(|t| t / x1).collect();
        let mut coeffs = [0.0; 4];
        for i in 0..4 {
            // expand prod_{j != i} (s - s_j) / (s_i - s_j)
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for j in 0..4 {
                if j == i {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (d, c) in poly.iter().enumerate() {
                    next[d + 1] += c;
                    next[d] -= c * s[j];
                }
                poly = next;
                denom *= s[i] - s[j];
            }
            for (d, c) in poly.iter().enumerate() {
                coeffs[d] += self.values[i] * c / denom;
            }
        }
        let moments: f64 = coeffs.iter().enumerate().map(|(d, c)| c / (w + 1.0 + d as f64)).sum();
        x1.powf(w + 1.0) * moments
    }

    /// `int_0^{x_k} t^w u(t) dt` at every node.
    pub(crate) fn prefix_integral(&self, w: f64) -> Vec<f64> {
        let cells = self.cell_integrals(w);
        let mut out = vec![0.0; self.x.len()];
        for k in 0..cells.len() {
            out[k + 1] = out[k] + cells[k];
        }
        out
    }

    /// `int_{x_k}^delta t^w u(t) dt` at nodes `k >= 1`; entry 0 is undefined
    /// unless `w > -1`.
    pub(crate) fn suffix_integral(&self, w: f64) -> Vec<f64> {
        let cells = self.cell_integrals(w);
        let m = cells.len();
        let mut out = vec![0.0; self.x.len()];
        for k in (1..m).rev() {
            out[k] = out[k + 1] + cells[k];
        }
        out[0] = out[1] + cells[0];
        out
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(LakeError::Precondition(format!("alpha must be positive, got {alpha}")))
    }
}

/// `I_alpha u(x) = x^-alpha int_0^x t^(alpha-1) u(t) dt`, with value
/// `u(0) / alpha` at the origin.
pub fn hardy_i(alpha: f64, u: &Sampled1d) -> Result<Sampled1d> {
    check_alpha(alpha)?;
    let pre = u.prefix_integral(alpha - 1.0);
    let vals = u
        .x
        .iter()
        .zip(&pre)
        .map(|(&x, &c)| if x == 0.0 { u.values[0] / alpha } else { c / x.powf(alpha) })
        .collect();
    Ok(u.with_values(vals))
}

/// `J_alpha u(x) = x^alpha int_x^delta t^(-alpha-1) u(t) dt`, with value
/// `u(0) / alpha` at the origin.
pub fn hardy_j(alpha: f64, u: &Sampled1d) -> Result<Sampled1d> {
    check_alpha(alpha)?;
    let suf = u.suffix_integral(-alpha - 1.0);
    let vals = u
        .x
        .iter()
        .zip(&suf)
        .map(|(&x, &c)| if x == 0.0 { u.values[0] / alpha } else { x.powf(alpha) * c })
        .collect();
    Ok(u.with_values(vals))
}
