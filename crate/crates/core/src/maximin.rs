//! Maximising the worst-case utility over the hypersimplex.
//!
//! [`solve_maximin`] runs projected subgradient ascent on `f^worst`, using the
//! greedy best response as the min-oracle at each iterate, and returns the best
//! iterate together with an a-priori optimality certificate. [`grid_search`]
//! and [`grid_oracle`] brute-force small instances.

use serde::{Deserialize, Serialize};

use crate::best_response::{greedy_loads, greedy_min_load};
use crate::error::{Error, Result};
use crate::game::{utility_raw, GameSpec, LoadVector, MixedStrategy};
use crate::hypersimplex::project;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: f64,
    pub iterations: usize,
    /// Starting point; `None` means the uniform strategy `[r/n, ..., r/n]`.
    pub initial: Option<MixedStrategy>,
}

impl SolverConfig {
    pub fn new(step: f64, iterations: usize) -> Result<Self> {
        let cfg = Self { step, iterations, initial: None };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `step = eps`, `iterations = ceil(1 / eps^2)`: error `O(eps)`.
    pub fn from_epsilon(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        Self::new(eps, (1.0 / (eps * eps)).ceil() as usize)
    }

    /// Fixed horizon with the step `1 / sqrt(T * sum E_k^2)` that balances the
    /// two terms of [`error_bound`].
    pub fn for_horizon(spec: &GameSpec, iterations: usize) -> Result<Self> {
        let energy: f64 = spec.means().iter().map(|e| e * e).sum();
        let step = if energy > 0.0 { 1.0 / (iterations as f64 * energy).sqrt() } else { 1.0 };
        Self::new(step, iterations)
    }

    pub fn with_initial(mut self, initial: MixedStrategy) -> Self {
        self.initial = Some(initial);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("at least one iteration is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximinResult {
    pub strategy: MixedStrategy,
    pub loads: LoadVector,
    pub value: f64,
    /// Upper bound on `f^maximin - value`.
    pub error_bound: f64,
}

/// `dist_sq / (2 beta T) + (beta / 2) sum E_k^2`, where `dist_sq` bounds the
/// squared distance from the starting point to an optimum.
pub fn error_bound(spec: &GameSpec, cfg: &SolverConfig, dist_sq: f64) -> Result<f64> {
    cfg.validate()?;
    if !(dist_sq >= 0.0) {
        return Err(Error::InvalidParameter(format!("dist_sq must be non-negative, got {dist_sq}")));
    }
    let energy: f64 = spec.means().iter().map(|e| e * e).sum();
    Ok(dist_sq / (2.0 * cfg.step * cfg.iterations as f64) + cfg.step / 2.0 * energy)
}

/// Default `dist_sq`: both points lie in `[0,1]^n`.
pub fn default_dist_sq(spec: &GameSpec) -> f64 {
    spec.n() as f64
}

pub fn solve_maximin(spec: &GameSpec, cfg: &SolverConfig) -> Result<MaximinResult> {
    solve_maximin_observed(spec, cfg, |_, _| {})
}

/// [`solve_maximin`], calling `observe(t, p_t)` on every iterate (1-based).
pub fn solve_maximin_observed<F>(spec: &GameSpec, cfg: &SolverConfig, mut observe: F) -> Result<MaximinResult>
where
    F: FnMut(usize, &MixedStrategy),
{
    cfg.validate()?;
    let n = spec.n();
    let r = spec.r();
    let q = spec.m() - 1;
    let means = spec.means();
    let mut p = match &cfg.initial {
        Some(init) => {
            spec.check_len(init.n())?;
            init.clone()
        }
        None => MixedStrategy::uniform(n, r)?,
    };

    let mut best: Option<(f64, MixedStrategy, Vec<usize>)> = None;
    let mut weights = vec![0.0; n];
    let mut ascent = vec![0.0; n];
    for t in 1..=cfg.iterations {
        observe(t, &p);
        for ((w, pk), e) in weights.iter_mut().zip(p.probs()).zip(means) {
            *w = pk * e;
        }
        let loads = greedy_loads(&weights, q, r);
        let value = utility_raw(means, p.probs(), &loads);
        if best.as_ref().map_or(true, |(v, _, _)| value > *v) {
            best = Some((value, p.clone(), loads.clone()));
        }
        if t == cfg.iterations {
            break;
        }
        for k in 0..n {
            ascent[k] = p.probs()[k] + cfg.step * means[k] / (1.0 + loads[k] as f64);
        }
        p = project(&ascent, r)?;
    }

    let (value, strategy, loads) = best.expect("at least one iteration");
    Ok(MaximinResult {
        strategy,
        loads: LoadVector::new_unchecked(loads, q),
        value,
        error_bound: error_bound(spec, cfg, default_dist_sq(spec))?,
    })
}

/// Gradient of `f(·, x)` with respect to `p`: `E_k / (1 + x_k)`.
pub fn utility_gradient(spec: &GameSpec, x: &LoadVector) -> Result<Vec<f64>> {
    spec.check_len(x.n())?;
    Ok(spec
        .means()
        .iter()
        .zip(x.loads())
        .map(|(e, &xk)| e / (1.0 + xk as f64))
        .collect())
}

/// Largest number of grid points [`grid_search`] will visit.
pub const MAX_GRID_POINTS: u64 = 50_000_000;

/// Best grid point of the hypersimplex with spacing `1 / round(1 / resolution)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub value: f64,
    pub strategy: MixedStrategy,
    pub points: u64,
}

/// Exhaustive search of `f^worst` over `{p in I : p_k in {0, h, 2h, ..., 1}}`.
/// The first maximiser in lexicographic order of the grid is kept.
pub fn grid_search(spec: &GameSpec, resolution: f64) -> Result<GridResult> {
    if !(resolution > 0.0) || resolution > 1.0 {
        return Err(Error::InvalidParameter(format!("resolution must lie in (0, 1], got {resolution}")));
    }
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let n = spec.n();
    let r = spec.r();
    let estimate = (steps as f64 + 1.0).powi(n as i32 - 1);
    if estimate > MAX_GRID_POINTS as f64 * 10.0 {
        return Err(Error::GuardExceeded(format!("grid with {estimate:.0} candidate points")));
    }

    struct Search<'a> {
        spec: &'a GameSpec,
        steps: usize,
        units: Vec<usize>,
        probs: Vec<f64>,
        weights: Vec<f64>,
        best: Option<(f64, Vec<f64>)>,
        points: u64,
    }

    impl Search<'_> {
        fn visit(&mut self, pos: usize, remaining: usize) {
            let n = self.units.len();
            if pos + 1 == n {
                if remaining > self.steps {
                    return;
                }
                self.units[pos] = remaining;
                self.evaluate();
                return;
            }
            let max_rest = (n - pos - 1) * self.steps;
            for u in 0..=self.steps.min(remaining) {
                if remaining - u > max_rest {
                    continue;
                }
                self.units[pos] = u;
                self.visit(pos + 1, remaining - u);
            }
        }

        fn evaluate(&mut self) {
            self.points += 1;
            let h = self.steps as f64;
            let means = self.spec.means();
            for k in 0..self.units.len() {
                self.probs[k] = self.units[k] as f64 / h;
                self.weights[k] = self.probs[k] * means[k];
            }
            let loads = greedy_loads(&self.weights, self.spec.m() - 1, self.spec.r());
            let value = utility_raw(means, &self.probs, &loads);
            if self.best.as_ref().map_or(true, |(v, _)| value > *v) {
                self.best = Some((value, self.probs.clone()));
            }
        }
    }

    let mut search = Search {
        spec,
        steps,
        units: vec![0; n],
        probs: vec![0.0; n],
        weights: vec![0.0; n],
        best: None,
        points: 0,
    };
    search.visit(0, r * steps);
    let (value, probs) = search
        .best
        .ok_or_else(|| Error::Internal("empty grid".into()))?;
    Ok(GridResult { value, strategy: MixedStrategy::new(probs, r)?, points: search.points })
}

/// Grid maximum of `f^worst` for `n in {2, 3}`. Within
/// `max_k E_k * resolution * n` of the true maximum.
pub fn grid_oracle(spec: &GameSpec, resolution: f64) -> Result<f64> {
    if spec.n() > 3 {
        return Err(Error::InvalidParameter(format!("grid oracle supports n <= 3, got n = {}", spec.n())));
    }
    Ok(grid_search(spec, resolution)?.value)
}

/// Slack of [`grid_oracle`] relative to the true maximum.
pub fn grid_slack(spec: &GameSpec, resolution: f64) -> f64 {
    spec.means().iter().copied().fold(0.0, f64::max) * resolution * spec.n() as f64
}

/// `f^worst` at the strategy returned by the solver, through the public oracle.
pub fn certify(spec: &GameSpec, strategy: &MixedStrategy) -> Result<f64> {
    Ok(greedy_min_load(strategy, spec)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(means: &[f64], m: usize, r: usize) -> GameSpec {
        GameSpec::new(means.to_vec(), m, r, None).unwrap()
    }

    #[test]
    fn solver_examples() {
        let cfg = SolverConfig::new(0.01, 10_000).unwrap();
        let res = solve_maximin(&spec(&[1.0, 1.0], 2, 1), &cfg).unwrap();
        assert!((res.value - 0.75).abs() <= 0.02);

        let res = solve_maximin(&spec(&[4.0, 1.0], 2, 1), &cfg).unwrap();
        assert!((res.value - 2.0).abs() <= 0.05);
        assert!(res.strategy.probs()[0] > 0.95);

        let res = solve_maximin(&spec(&[1.0, 1.0], 3, 1), &cfg).unwrap();
        assert!((res.value - 0.5).abs() <= 0.02);
    }

    #[test]
    fn result_loads_are_best_response() {
        let s = spec(&[3.0, 2.0, 1.5, 0.2], 3, 2);
        let res = solve_maximin(&s, &SolverConfig::from_epsilon(0.05).unwrap()).unwrap();
        let br = greedy_min_load(&res.strategy, &s).unwrap();
        assert_eq!(br.loads, res.loads);
        assert_eq!(br.value, res.value);
    }

    #[test]
    fn error_bound_examples() {
        let s = spec(&[1.0, 1.0], 2, 1);
        let cfg = SolverConfig::new(0.1, 100).unwrap();
        assert_abs_diff_eq!(error_bound(&s, &cfg, 0.5).unwrap(), 0.125, epsilon = 1e-15);

        let z = spec(&[0.0, 0.0, 0.0], 2, 1);
        assert_abs_diff_eq!(error_bound(&z, &cfg, 0.5).unwrap(), 0.5 / 20.0, epsilon = 1e-15);

        let bad = SolverConfig { step: 0.0, iterations: 10, initial: None };
        assert!(error_bound(&s, &bad, 1.0).is_err());
        let bad = SolverConfig { step: 0.1, iterations: 0, initial: None };
        assert!(error_bound(&s, &bad, 1.0).is_err());
    }

    #[test]
    fn error_bound_is_linear_in_epsilon() {
        let s = spec(&[2.0, 1.0, 0.5], 3, 1);
        let b1 = error_bound(&s, &SolverConfig::from_epsilon(0.1).unwrap(), 3.0).unwrap();
        let b2 = error_bound(&s, &SolverConfig::from_epsilon(0.01).unwrap(), 3.0).unwrap();
        // dist/2 + sumE2/2 times eps, up to the ceil in T
        let c = 3.0 / 2.0 + (4.0 + 1.0 + 0.25) / 2.0;
        assert_abs_diff_eq!(b1, 0.1 * c, epsilon = 1e-9);
        assert_abs_diff_eq!(b2, 0.01 * c, epsilon = 1e-9);
    }

    #[test]
    fn grid_examples() {
        let v = grid_oracle(&spec(&[1.0, 1.0], 2, 1), 1e-3).unwrap();
        assert!((v - 0.75).abs() <= 1e-3);
        let v = grid_oracle(&spec(&[1.0, 1.0], 3, 1), 1e-3).unwrap();
        assert!((v - 0.5).abs() <= 2e-3);
        let v = grid_oracle(&spec(&[1.0, 1.0, 1.0], 3, 1), 1e-2).unwrap();
        assert!((v - 2.0 / 3.0).abs() <= 0.05);
        assert!(grid_oracle(&spec(&[1.0; 4], 2, 1), 1e-2).is_err());
    }

    #[test]
    fn grid_handles_r_two_in_three_dims() {
        let g = grid_search(&spec(&[1.0, 1.0, 1.0], 2, 2), 0.01).unwrap();
        // m = 2: f^worst = 2 - max_(1) - max_(2) halves; uniform 2/3 gives 4/3
        assert!((g.value - 4.0 / 3.0).abs() <= 0.01);
        assert!(crate::hypersimplex::contains(g.strategy.probs(), 2, 1e-9));
    }
}
