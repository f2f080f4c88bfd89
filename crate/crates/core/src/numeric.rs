//! Reductions whose result does not depend on the rayon thread count.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Sum of `f(i)` over `0..n`, reduced in fixed-size chunks so the rounding
/// pattern is identical for any number of worker threads.
pub fn det_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    det_sum(a.len(), |i| a[i] * b[i])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Discrete `(sum w_i |u_i|^p * area)^(1/p)`; `p = inf` gives `max |u_i|`
/// over cells with positive weight.
pub fn weighted_lp(values: &[f64], weights: Option<&[f64]>, area: f64, p: f64) -> f64 {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    if p.is_infinite() {
        return values
            .iter()
            .enumerate()
            .filter(|&(i, _)| w(i) > 0.0)
            .fold(0.0, |m, (_, v)| m.max(v.abs()));
    }
    // scale by the max to keep large p from overflowing
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s = det_sum(values.len(), |i| w(i) * (values[i].abs() / scale).powf(p));
    scale * (s * area).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_sum_matches_serial_for_small_inputs() {
        let v: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        let s = det_sum(v.len(), |i| v[i]);
        let serial: f64 = v.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).sum();
        assert_eq!(s, serial);
    }

    #[test]
    fn lp_of_constant() {
        let v = vec![2.0; 100];
        let n = weighted_lp(&v, None, 0.01, 3.0);
        assert!((n - 2.0).abs() < 1e-14);
        assert_eq!(weighted_lp(&v, None, 0.01, f64::INFINITY), 2.0);
    }
}
