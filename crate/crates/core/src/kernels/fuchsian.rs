use crate::error::{LakeError, Result};
use crate::kernels::hardy::Sampled1d;

#[derive(Debug, Clone, PartialEq)]
pub struct FuchsianSolution {
    /// `u` solving `-x u'' + a u' = x^(a+1) f`, `u(0) = 0`, `u'(delta) = 0`.
    pub u: Sampled1d,
    /// `u' = J_a(x^(a+1) f)`.
    pub du: Sampled1d,
    /// `u / x^(a+1)`, continued to the origin.
    pub phi: Sampled1d,
}

/// Root of the indicial polynomial `lambda + a + 2` of the normal form.
pub fn indicial_root(a: f64) -> f64 {
    -(a + 2.0)
}

/// Solves the one-dimensional normal form by composing the Hardy operators:
/// `u' = J_a(x^(a+1) f) = x^a int_x^delta f`, then
/// `u = x I_1(u') = int_0^x t^a W(t) dt` with `W = int_.^delta f`.
/// The powers of `x` are carried analytically so only the smooth factors
/// `f` and `W` are interpolated.
pub fn solve_fuchsian_1d(a: f64, f: &Sampled1d) -> Result<FuchsianSolution> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(LakeError::Precondition(format!("depth exponent must be positive, got {a}")));
    }
    let x = f.x().to_vec();
    let w_tail = f.suffix_integral(0.0);
    let big_w = Sampled1d::new(x.clone(), w_tail.clone())?;
    let u_vals = big_w.prefix_integral(a);
    let du_vals: Vec<f64> = x.iter().zip(&w_tail).map(|(t, w)| t.powf(a) * w).collect();
    let phi_vals: Vec<f64> = x
        .iter()
        .zip(&u_vals)
        .enumerate()
        .map(|(k, (t, u))| if k == 0 { w_tail[0] / (a + 1.0) } else { u / t.powf(a + 1.0) })
        .collect();
    Ok(FuchsianSolution {
        u: Sampled1d::new(x.clone(), u_vals)?,
        du: Sampled1d::new(x.clone(), du_vals)?,
        phi: Sampled1d::new(x, phi_vals)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicial_roots() {
        assert_eq!(indicial_root(1.0), -3.0);
        assert_eq!(indicial_root(0.5), -2.5);
        for a in [1e-6, 0.3, 7.0] {
            assert!(indicial_root(a) < -2.0);
        }
    }

    #[test]
    fn constant_source_matches_closed_form() {
        let (c, delta) = (1.7, 1.0);
        for a in [0.5, 1.0, 2.3] {
            let f = Sampled1d::uniform(delta, 400, |_| c).unwrap();
            let s = solve_fuchsian_1d(a, &f).unwrap();
            for (k, &x) in f.x().iter().enumerate() {
                let u = c * (delta * x.powf(a + 1.0) / (a + 1.0) - x.powf(a + 2.0) / (a + 2.0));
                let phi = c * (delta / (a + 1.0) - x / (a + 2.0));
                assert!((s.u.values()[k] - u).abs() < 1e-10);
                assert!((s.phi.values()[k] - phi).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn solves_the_ode_against_rk4() {
        // integrate u' = v, v' = (a v - x^(a+1) f) / x backwards from delta
        // with u(delta) from the solver and v(delta) = 0
        let a = 1.4;
        let f = |x: f64| (2.0 * x).cos() + x;
        let s = solve_fuchsian_1d(a, &Sampled1d::uniform(1.0, 800, f).unwrap()).unwrap();
        let rhs = |x: f64, y: [f64; 2]| [y[1], (a * y[1] - x.powf(a + 1.0) * f(x)) / x];
        let steps = 20_000;
        let h = -(1.0 - 0.2) / steps as f64;
        let mut x = 1.0;
        let mut y = [*s.u.values().last().unwrap(), 0.0];
        for _ in 0..steps {
            let k1 = rhs(x, y);
            let k2 = rhs(x + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs(x + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            x += h;
        }
        assert!((s.u.interpolate(0.2) - y[0]).abs() < 1e-8, "{} vs {}", s.u.interpolate(0.2), y[0]);
        assert!((s.du.interpolate(0.2) - y[1]).abs() < 1e-7);
        // and the boundary value at the origin
        assert_eq!(s.u.values()[0], 0.0);
    }

    #[test]
    fn zero_source_gives_zero() {
        let s = solve_fuchsian_1d(1.0, &Sampled1d::uniform(1.0, 50, |_| 0.0).unwrap()).unwrap();
        assert!(s.u.values().iter().chain(s.phi.values()).all(|v| *v == 0.0));
    }

    #[test]
    fn scaled_profile_is_bounded_and_holder() {
        let a = 0.7;
        let f = Sampled1d::uniform(1.0, 400, |x| 1.0 / (1.0 + 10.0 * x)).unwrap();
        let s = solve_fuchsian_1d(a, &f).unwrap();
        let phi = s.phi.values();
        assert!(phi.iter().all(|v| v.is_finite() && v.abs() < 10.0));
        let x = s.phi.x();
        let mut q: f64 = 0.0;
        for i in 0..x.len() {
            for j in (i + 1)..x.len().min(i + 40) {
                q = q.max((phi[j] - phi[i]).abs() / (x[j] - x[i]).sqrt());
            }
        }
        assert!(q < 10.0, "{q}");
    }

    #[test]
    fn rejects_nonpositive_exponent() {
        assert!(solve_fuchsian_1d(0.0, &Sampled1d::uniform(1.0, 10, |_| 1.0).unwrap()).is_err());
    }
}
