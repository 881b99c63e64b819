#![allow(dead_code)]

use fairshare::MixedStrategy;
use rand::Rng;

/// Projection onto `{z in [0,1]^n : sum z = r}` by bisection on the shift `mu`
/// in `z = clip(y - mu, 0, 1)`.
pub fn bisection_project(y: &[f64], r: usize) -> Vec<f64> {
    let total = |mu: f64| y.iter().map(|v| (v - mu).clamp(0.0, 1.0)).sum::<f64>();
    let mut lo = y.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > r as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    y.iter().map(|v| (v - mu).clamp(0.0, 1.0)).collect()
}

/// A random point of the hypersimplex: uniform draws pushed through the
/// bisection projection, occasionally snapped to the boundary.
pub fn random_strategy<R: Rng>(rng: &mut R, n: usize, r: usize) -> MixedStrategy {
    let y: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..6) {
            0 => -1.0,
            1 => 2.0,
            _ => rng.random_range(-0.5..1.5),
        })
        .collect();
    MixedStrategy::new(bisection_project(&y, r), r).unwrap()
}

pub fn random_means<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// `sum p_k E_k - max over opponent loads` evaluated by brute force for two
/// players: subtract half of the `r` largest weights.
pub fn f_worst_two_players(p: &[f64], means: &[f64], r: usize) -> f64 {
    let mut w: Vec<f64> = p.iter().zip(means).map(|(p, e)| p * e).collect();
    let total: f64 = w.iter().sum();
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    total - 0.5 * w[..r].iter().sum::<f64>()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
