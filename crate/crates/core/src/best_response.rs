//! The adversary's problem: minimise `f(p, x)` over opponent load vectors
//! `x` in `J_{m-1}`.
//!
//! `f(p, ·)` is separable with convex, decreasing terms `w_k / (1 + x_k)`, so
//! placing the `(m-1) r` opponent picks one at a time on the resource with the
//! largest marginal decrease is exact. [`brute_force_min_load`] enumerates
//! `J_{m-1}` and is kept as an independent check.

use crate::error::{Error, Result};
use crate::game::{utility_raw, GameSpec, LoadVector, MixedStrategy};

/// Exhaustive-enumeration limits.
pub const MAX_ENUM_RESOURCES: usize = 8;
pub const MAX_ENUM_LEVEL: usize = 4;
pub const MAX_ENUM_PICKS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub value: f64,
    pub loads: LoadVector,
}

/// Greedy placement of `q * r` unit loads with per-resource cap `q` against
/// weights `w_k = p_k E_k`. Ties go to the lowest index.
pub(crate) fn greedy_loads(weights: &[f64], q: usize, r: usize) -> Vec<usize> {
    let n = weights.len();
    let mut loads = vec![0usize; n];
    for _ in 0..q * r {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            if loads[k] >= q {
                continue;
            }
            let x = loads[k] as f64;
            let gain = weights[k] / (1.0 + x) - weights[k] / (2.0 + x);
            match best {
                Some((_, g)) if gain <= g => {}
                _ => best = Some((k, gain)),
            }
        }
        // n * q >= q * r, so a resource below the cap always exists.
        let (k, _) = best.expect("capacity exhausted before all loads were placed");
        loads[k] += 1;
    }
    loads
}

fn check_strategy(p: &MixedStrategy, spec: &GameSpec) -> Result<()> {
    spec.check_len(p.n())?;
    if p.picks() != spec.r() {
        return Err(Error::NotInHypersimplex {
            n: p.n(),
            r: spec.r(),
            reason: format!("strategy built for r={}", p.picks()),
        });
    }
    Ok(())
}

/// Exact minimiser of `f(p, ·)` over `J_{m-1}` in `O(n m r)`.
pub fn greedy_min_load(p: &MixedStrategy, spec: &GameSpec) -> Result<BestResponse> {
    check_strategy(p, spec)?;
    let weights: Vec<f64> = p.probs().iter().zip(spec.means()).map(|(p, e)| p * e).collect();
    let q = spec.m() - 1;
    let loads = greedy_loads(&weights, q, spec.r());
    let value = utility_raw(spec.means(), p.probs(), &loads);
    Ok(BestResponse { value, loads: LoadVector::new_unchecked(loads, q) })
}

/// Minimum of `f(p, ·)` by full enumeration of `J_{m-1}`. The first minimiser
/// in lexicographic order is returned.
pub fn brute_force_min_load(p: &MixedStrategy, spec: &GameSpec) -> Result<BestResponse> {
    check_strategy(p, spec)?;
    if spec.m() > MAX_ENUM_LEVEL + 1 {
        return Err(Error::GuardExceeded(format!("m = {} > {}", spec.m(), MAX_ENUM_LEVEL + 1)));
    }
    let candidates = enumerate_loads(spec.n(), spec.m() - 1, spec.r())?;
    let mut best: Option<BestResponse> = None;
    for x in candidates {
        let value = utility_raw(spec.means(), p.probs(), x.loads());
        if best.as_ref().map_or(true, |b| value < b.value) {
            best = Some(BestResponse { value, loads: x });
        }
    }
    best.ok_or_else(|| Error::Internal("J_{m-1} enumerated empty".into()))
}

/// All of `J_q` for `n` resources and `r` picks, in lexicographic order.
pub fn enumerate_loads(n: usize, q: usize, r: usize) -> Result<Vec<LoadVector>> {
    if n > MAX_ENUM_RESOURCES || q > MAX_ENUM_LEVEL || r > MAX_ENUM_PICKS {
        return Err(Error::GuardExceeded(format!(
            "n={n}, q={q}, r={r} exceeds n <= {MAX_ENUM_RESOURCES}, q <= {MAX_ENUM_LEVEL}, r <= {MAX_ENUM_PICKS}"
        )));
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fill(&mut current, 0, q * r, q, &mut out);
    Ok(out)
}

fn fill(current: &mut [usize], pos: usize, remaining: usize, q: usize, out: &mut Vec<LoadVector>) {
    let n = current.len();
    if pos == n {
        if remaining == 0 {
            out.push(LoadVector::new_unchecked(current.to_vec(), q));
        }
        return;
    }
    // Prune: what is left must fit into the remaining slots.
    let slots_after = n - pos - 1;
    for v in 0..=q.min(remaining) {
        if remaining - v > slots_after * q {
            continue;
        }
        current[pos] = v;
        fill(current, pos + 1, remaining - v, q, out);
    }
    current[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(means: &[f64], m: usize, r: usize) -> GameSpec {
        GameSpec::new(means.to_vec(), m, r, None).unwrap()
    }

    fn strat(p: &[f64], r: usize) -> MixedStrategy {
        MixedStrategy::new(p.to_vec(), r).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let br = greedy_min_load(&strat(&[0.5, 0.5], 1), &spec(&[4.0, 1.0], 3, 1)).unwrap();
        assert_eq!(br.loads.loads(), &[2, 0]);
        assert_abs_diff_eq!(br.value, 7.0 / 6.0, epsilon = 1e-15);

        let br = greedy_min_load(&strat(&[0.6, 0.4], 1), &spec(&[1.0, 1.0], 2, 1)).unwrap();
        assert_eq!(br.loads.loads(), &[1, 0]);
        assert_abs_diff_eq!(br.value, 0.7, epsilon = 1e-15);

        let br = greedy_min_load(&strat(&[0.5, 0.5], 1), &spec(&[1.0, 1.0], 2, 1)).unwrap();
        assert_eq!(br.loads.loads(), &[1, 0]);
        assert_abs_diff_eq!(br.value, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn brute_force_examples() {
        let br = brute_force_min_load(&strat(&[0.5, 0.5], 1), &spec(&[4.0, 1.0], 3, 1)).unwrap();
        assert_eq!(br.loads.loads(), &[2, 0]);
        assert_abs_diff_eq!(br.value, 7.0 / 6.0, epsilon = 1e-15);

        let s = spec(&[0.0, 0.0, 0.0], 3, 1);
        let br = brute_force_min_load(&MixedStrategy::uniform(3, 1).unwrap(), &s).unwrap();
        assert_eq!(br.value, 0.0);
        assert_eq!(br.loads.loads(), &[0, 0, 2]);
    }

    #[test]
    fn enumeration_examples() {
        let loads: Vec<Vec<usize>> =
            enumerate_loads(2, 2, 1).unwrap().iter().map(|x| x.loads().to_vec()).collect();
        assert_eq!(loads, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let loads: Vec<Vec<usize>> =
            enumerate_loads(3, 1, 2).unwrap().iter().map(|x| x.loads().to_vec()).collect();
        assert_eq!(loads, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        assert_eq!(enumerate_loads(3, 2, 1).unwrap().len(), 6);
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(enumerate_loads(9, 1, 1), Err(Error::GuardExceeded(_))));
        assert!(matches!(enumerate_loads(4, 5, 1), Err(Error::GuardExceeded(_))));
        assert!(matches!(enumerate_loads(6, 1, 4), Err(Error::GuardExceeded(_))));
        let s = spec(&[1.0; 3], 6, 1);
        assert!(brute_force_min_load(&MixedStrategy::uniform(3, 1).unwrap(), &s).is_err());
    }

    #[test]
    fn m2_loads_cover_top_r_weights() {
        let s = spec(&[3.0, 1.0, 2.0, 0.5], 2, 2);
        let p = strat(&[0.2, 0.9, 0.6, 0.3], 2);
        // weights 0.6, 0.9, 1.2, 0.15 -> top two are resources 3 and 2
        let br = greedy_min_load(&p, &s).unwrap();
        assert_eq!(br.loads.loads(), &[0, 1, 1, 0]);
    }
}
