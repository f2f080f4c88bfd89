use std::f64::consts::E;

use crate::elliptic::velocity_gradient_norm;
use crate::error::{LakeError, Result};
use crate::geometry::VectorField;
use crate::numeric::{det_sum, weighted_lp};
use crate::transport::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub value: f64,
    /// The bound has reached `M^2` (time beyond `u0^2 / (2 e C)`).
    pub saturated: bool,
}

/// Solution of `y' = e C y / ln(M^2 / y)`, `y(0) = y0`:
/// `y(t) = M^2 exp(-sqrt(u0^2 - 2 e C t))`, `u0 = ln(M^2 / y0)`.
pub fn osgood_envelope(y0: f64, m: f64, c: f64, t: f64) -> Result<Envelope> {
    if !(y0 >= 0.0) || !(c >= 0.0) || !(t >= 0.0) || !(m >= 0.0) || !c.is_finite() || !m.is_finite() {
        return Err(LakeError::Precondition(format!(
            "envelope needs y0 >= 0, M >= 0, C >= 0, t >= 0 (got {y0}, {m}, {c}, {t})"
        )));
    }
    if y0 == 0.0 {
        return Ok(Envelope { value: 0.0, saturated: false });
    }
    let m2 = m * m;
    if y0 >= m2 {
        return Ok(Envelope { value: m2, saturated: true });
    }
    let u0 = (m2 / y0).ln();
    let s = u0 * u0 - 2.0 * E * c * t;
    if s <= 0.0 {
        return Ok(Envelope { value: m2, saturated: true });
    }
    Ok(Envelope { value: m2 * (-s.sqrt()).exp(), saturated: false })
}

/// `sup_p (1/p) |grad v|_p` over every snapshot and every `p` in the list.
pub fn growth_constant(run: &Trajectory, p_list: &[f64]) -> Result<f64> {
    if p_list.is_empty() || p_list.iter().any(|p| !(*p >= 3.0)) {
        return Err(LakeError::Precondition("exponents must be >= 3".into()));
    }
    let mut c: f64 = 0.0;
    for s in &run.snapshots {
        let g = velocity_gradient_norm(&s.velocity);
        let area = s.velocity.grid().cell_area();
        for &p in p_list {
            c = c.max(weighted_lp(&g, None, area, p) / p);
        }
    }
    Ok(c)
}

fn sqrt_b_speed(v: &VectorField) -> Vec<f64> {
    v.values().iter().zip(v.grid().depth()).map(|(w, b)| b.sqrt() * w[0].hypot(w[1])).collect()
}

fn percentile(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = ((q * (v.len() - 1) as f64).round() as usize).min(v.len() - 1);
    v[k]
}

/// Twin runs differing only in their initial data.
#[derive(Debug, Clone)]
pub struct UniquenessExperiment<'a> {
    pub run_a: &'a Trajectory,
    pub run_b: &'a Trajectory,
    /// `sup_t |sqrt(b)(v_A - v_B)|_inf + sup_t |sqrt(b) v_B|_inf` over cell centers.
    pub m: f64,
    /// Same combination with 99.9th percentiles instead of maxima.
    pub m_p999: f64,
    pub c: f64,
    pub times: Vec<f64>,
    /// `|sqrt(b)(v_A - v_B)|_2^2` per snapshot.
    pub y: Vec<f64>,
}

impl<'a> UniquenessExperiment<'a> {
    /// `C` is fitted on run A with the given exponents.
    pub fn new(run_a: &'a Trajectory, run_b: &'a Trajectory, p_list: &[f64]) -> Result<Self> {
        if run_a.snapshots.len() != run_b.snapshots.len() || run_a.snapshots.is_empty() {
            return Err(LakeError::GridMismatch(format!(
                "runs have {} and {} snapshots",
                run_a.snapshots.len(),
                run_b.snapshots.len()
            )));
        }
        let mut times = Vec::new();
        let mut y = Vec::new();
        let (mut diff_max, mut b_max, mut diff_q, mut b_q) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (sa, sb) in run_a.snapshots.iter().zip(&run_b.snapshots) {
            let (va, vb) = (&sa.velocity, &sb.velocity);
            if !va.grid().same_layout(vb.grid()) {
                return Err(LakeError::GridMismatch("twin runs use different grids".into()));
            }
            if sa.time != sb.time {
                return Err(LakeError::GridMismatch(format!("snapshot times differ: {} vs {}", sa.time, sb.time)));
            }
            let grid = va.grid();
            let depth = grid.depth();
            let (a, b) = (va.values(), vb.values());
            let diff = VectorField::new(grid.clone(), a.iter().zip(b).map(|(p, q)| [p[0] - q[0], p[1] - q[1]]).collect());
            let yk = det_sum(grid.len(), |k| {
                let d = diff.values()[k];
                depth[k] * (d[0] * d[0] + d[1] * d[1])
            }) * grid.cell_area();
            let sd = sqrt_b_speed(&diff);
            let sbv = sqrt_b_speed(vb);
            diff_max = diff_max.max(sd.iter().cloned().fold(0.0, f64::max));
            b_max = b_max.max(sbv.iter().cloned().fold(0.0, f64::max));
            diff_q = diff_q.max(percentile(sd, 0.999));
            b_q = b_q.max(percentile(sbv, 0.999));
            times.push(sa.time);
            y.push(yk);
        }
        let c = growth_constant(run_a, p_list)?;
        Ok(Self { run_a, run_b, m: diff_max + b_max, m_p999: diff_q + b_q, c, times, y })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub envelope: Vec<f64>,
    pub saturated: Vec<bool>,
    pub m: f64,
    pub m_p999: f64,
    pub c: f64,
    pub slack: f64,
    /// `y(t) <= slack * envelope(y(0) + y0_tol, M, C, t)` at every snapshot.
    pub pass: bool,
}

pub fn uniqueness_report(exp: &UniquenessExperiment<'_>, slack: f64, y0_tol: f64) -> Result<UniquenessReport> {
    if !(slack >= 1.0) || !(y0_tol >= 0.0) {
        return Err(LakeError::Precondition(format!("need slack >= 1 and y0_tol >= 0, got {slack}, {y0_tol}")));
    }
    let y0 = exp.y[0] + y0_tol;
    let t0 = exp.times[0];
    let mut envelope = Vec::with_capacity(exp.y.len());
    let mut saturated = Vec::with_capacity(exp.y.len());
    let mut pass = true;
    for (&t, &yk) in exp.times.iter().zip(&exp.y) {
        let e = osgood_envelope(y0, exp.m, exp.c, t - t0)?;
        pass &= yk <= slack * e.value;
        envelope.push(e.value);
        saturated.push(e.saturated);
    }
    Ok(UniquenessReport {
        times: exp.times.clone(),
        y: exp.y.clone(),
        envelope,
        saturated,
        m: exp.m,
        m_p999: exp.m_p999,
        c: exp.c,
        slack,
        pass,
    })
}
