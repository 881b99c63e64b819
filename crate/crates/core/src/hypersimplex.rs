//! Geometry of the (n,r)-hypersimplex `I = {p in [0,1]^n : sum p = r}`.
//!
//! * [`project`]: Euclidean projection onto `I` via a window walk over the
//!   sorted input.
//! * [`decompose`] / [`sample`]: write `p` as a convex combination of pure
//!   actions and draw one with the right marginals.
//! * [`split_load`]: write a load vector in `J_q` as a sum of `q` pure actions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{LoadVector, MixedStrategy, PureAction};

/// Residual coordinates below this are treated as zero by [`decompose`].
pub const RESIDUAL_EPS: f64 = 1e-12;

/// True iff every coordinate lies in `[-tol, 1 + tol]` and `|sum y - r| <= tol`.
pub fn contains(y: &[f64], r: usize, tol: f64) -> bool {
    y.iter().all(|&v| v >= -tol && v <= 1.0 + tol) && (y.iter().sum::<f64>() - r as f64).abs() <= tol
}

/// Index window `[a, b]` (1-based, into the input sorted non-increasingly) of
/// the coordinates left strictly inside `(0, 1)` by the projection, and the
/// shift `mu` applied to them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionWindow {
    pub a: usize,
    pub b: usize,
    pub mu: f64,
}

/// Prefix sums over the sorted vector so that `mu_{a,b}` is O(1).
struct WindowEval<'a> {
    sorted: &'a [f64],
    prefix: Vec<f64>,
    r: usize,
}

impl<'a> WindowEval<'a> {
    fn new(sorted: &'a [f64], r: usize) -> Self {
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in sorted {
            acc += v;
            prefix.push(acc);
        }
        Self { sorted, prefix, r }
    }

    /// 1-based accessor.
    fn y(&self, i: usize) -> f64 {
        self.sorted[i - 1]
    }

    fn mu(&self, a: usize, b: usize) -> f64 {
        let sum = self.prefix[b] - self.prefix[a - 1];
        (sum - (self.r as f64 - a as f64 + 1.0)) / (b - a + 1) as f64
    }

    fn cond_a(&self, a: usize, b: usize, mu: f64) -> bool {
        self.y(b) >= mu && mu >= self.y(a) - 1.0
    }

    fn cond_b(&self, b: usize, mu: f64) -> bool {
        b == self.sorted.len() || self.y(b + 1) < mu
    }

    fn cond_c(&self, a: usize, mu: f64) -> bool {
        a == 1 || self.y(a - 1) - 1.0 > mu
    }
}

/// Finds the window for a vector already sorted non-increasingly.
pub fn projection_window(sorted: &[f64], r: usize) -> Result<ProjectionWindow> {
    let n = sorted.len();
    if n < 2 || r == 0 || r >= n {
        return Err(Error::InvalidParameter(format!("projection needs n >= 2 and 0 < r < n, got n={n}, r={r}")));
    }
    let w = WindowEval::new(sorted, r);
    let (mut a, mut b) = (r, r);
    // b only grows and a only shrinks, so n outer passes always suffice.
    for _ in 0..=n {
        while !w.cond_b(b, w.mu(a, b)) {
            b += 1;
        }
        while !w.cond_c(a, w.mu(a, b)) {
            a -= 1;
        }
        let mu = w.mu(a, b);
        if w.cond_b(b, mu) && w.cond_c(a, mu) {
            // cond_a is an invariant of the walk; only rounding can break it.
            let slack = 1e-9 * (1.0 + w.y(1).abs().max(w.y(n).abs()));
            if !w.cond_a(a, b, mu) && !(w.y(b) + slack >= mu && mu >= w.y(a) - 1.0 - slack) {
                return Err(Error::Internal(format!("projection window [{a},{b}] lost feasibility")));
            }
            return Ok(ProjectionWindow { a, b, mu });
        }
    }
    Err(Error::Internal("projection window walk did not terminate".into()))
}

/// Sorts indices by value, largest first, lowest index first among ties.
fn order_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
    idx
}

/// Euclidean projection of `y` onto the (n,r)-hypersimplex.
pub fn project(y: &[f64], r: usize) -> Result<MixedStrategy> {
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let order = order_desc(y);
    let sorted: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let window = projection_window(&sorted, r)?;
    let z: Vec<f64> = y.iter().map(|v| (v - window.mu).clamp(0.0, 1.0)).collect();
    MixedStrategy::new(z, r)
}

/// A convex combination of pure actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub terms: Vec<(f64, PureAction)>,
}

impl Decomposition {
    /// `sum_t d_t * alpha_t`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.terms.first().map_or(0, |(_, a)| a.n());
        let mut out = vec![0.0; n];
        for (d, action) in &self.terms {
            for k in action.selected() {
                out[k] += d;
            }
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(d, _)| d).sum()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Writes `p` as a convex combination of at most `n + 1` pure actions.
///
/// Each step sorts the residual, takes the `r` largest coordinates as the next
/// action and gives it weight `min(1 - D - p_(r+1), p_(r))`, where `D` is the
/// weight already assigned and `p_(j)` the j-th largest residual.
pub fn decompose(p: &MixedStrategy) -> Result<Decomposition> {
    let n = p.n();
    let r = p.picks();
    if !contains(p.probs(), r, crate::game::SUM_TOLERANCE) {
        return Err(Error::NotInHypersimplex { n, r, reason: "decompose input".into() });
    }
    let mut residual = p.probs().to_vec();
    let mut assigned = 0.0;
    let mut terms = Vec::new();
    for _ in 0..2 * n {
        if residual.iter().all(|&v| v < RESIDUAL_EPS) || assigned >= 1.0 - RESIDUAL_EPS {
            return Ok(Decomposition { terms });
        }
        let order = order_desc(&residual);
        let d = (1.0 - assigned - residual[order[r]]).min(residual[order[r - 1]]).max(0.0);
        if d <= 0.0 {
            break;
        }
        let top = &order[..r];
        for &k in top {
            residual[k] = (residual[k] - d).max(0.0);
        }
        terms.push((d, PureAction::from_indices(n, top)?));
        assigned += d;
    }
    if residual.iter().all(|&v| v < RESIDUAL_EPS) || assigned >= 1.0 - RESIDUAL_EPS {
        return Ok(Decomposition { terms });
    }
    Err(Error::Internal(format!(
        "decomposition stalled after {} terms with weight {assigned}",
        terms.len()
    )))
}

/// Draws a pure action whose marginals are exactly `p`.
pub fn sample<R: Rng + ?Sized>(p: &MixedStrategy, rng: &mut R) -> Result<PureAction> {
    let decomposition = decompose(p)?;
    Ok(sample_from(&decomposition, rng))
}

/// Draws term `t` with probability `d_t / sum d`.
pub fn sample_from<R: Rng + ?Sized>(decomposition: &Decomposition, rng: &mut R) -> PureAction {
    let total = decomposition.total_weight();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (d, action) in &decomposition.terms {
        acc += d;
        if u < acc {
            return action.clone();
        }
    }
    decomposition.terms.last().expect("non-empty decomposition").1.clone()
}

/// Splits `x` in `J_q` into `q` pure actions summing to `x`, each time taking
/// the `r` largest remaining entries (lowest index first on ties).
pub fn split_load(x: &LoadVector, r: usize) -> Result<Vec<PureAction>> {
    let q = x.level();
    let checked = LoadVector::new(x.loads().to_vec(), q, r)?;
    let n = checked.n();
    if r == 0 || r >= n {
        return Err(Error::InvalidLoad(format!("picks must satisfy 0 < r < n, got r={r}")));
    }
    let mut remaining: Vec<usize> = checked.loads().to_vec();
    let mut actions = Vec::with_capacity(q);
    for _ in 0..q {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| remaining[j].cmp(&remaining[i]).then(i.cmp(&j)));
        let top = &idx[..r];
        for &k in top {
            remaining[k] -= 1;
        }
        actions.push(PureAction::from_indices(n, top)?);
    }
    Ok(actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn strat(p: &[f64], r: usize) -> MixedStrategy {
        MixedStrategy::new(p.to_vec(), r).unwrap()
    }

    #[test]
    fn project_examples() {
        let z = project(&[0.65, 0.35, 0.0], 1).unwrap();
        for (a, b) in z.probs().iter().zip([0.65, 0.35, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let z = project(&[0.9, 0.6, 0.1], 1).unwrap();
        for (a, b) in z.probs().iter().zip([0.65, 0.35, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let z = project(&[2.0, -1.0], 1).unwrap();
        assert_eq!(z.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn project_window_reports_mu() {
        let w = projection_window(&[0.9, 0.6, 0.1], 1).unwrap();
        assert_eq!((w.a, w.b), (1, 2));
        assert_abs_diff_eq!(w.mu, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn project_rejects_non_finite() {
        assert!(matches!(project(&[f64::NAN, 0.0], 1), Err(Error::NonFinite(0))));
        assert!(project(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&strat(&[0.6, 0.3, 0.1], 1)).unwrap();
        let got: Vec<(f64, String)> = d.terms.iter().map(|(w, a)| (*w, a.bitstring())).collect();
        assert_eq!(got.len(), 3);
        assert_abs_diff_eq!(got[0].0, 0.6, epsilon = 1e-15);
        assert_eq!(got[0].1, "100");
        assert_abs_diff_eq!(got[1].0, 0.3, epsilon = 1e-15);
        assert_eq!(got[1].1, "010");
        assert_abs_diff_eq!(got[2].0, 0.1, epsilon = 1e-15);
        assert_eq!(got[2].1, "001");

        let d = decompose(&strat(&[1.0, 0.5, 0.5], 2)).unwrap();
        let got: Vec<(f64, String)> = d.terms.iter().map(|(w, a)| (*w, a.bitstring())).collect();
        assert_eq!(got, vec![(0.5, "110".to_string()), (0.5, "101".to_string())]);

        let d = decompose(&strat(&[0.0, 1.0, 1.0, 0.0], 2)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.terms[0].0, 1.0);
        assert_eq!(d.terms[0].1.bitstring(), "0110");
    }

    #[test]
    fn decompose_boundary_r_is_n_minus_one() {
        let p = strat(&[0.9, 0.8, 0.7, 0.6], 3);
        let d = decompose(&p).unwrap();
        assert!(d.len() <= 5);
        for (a, b) in d.reconstruct().iter().zip(p.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn sample_vertex_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = strat(&[0.0, 1.0, 0.0], 1);
        for _ in 0..100 {
            assert_eq!(sample(&p, &mut rng).unwrap().bitstring(), "010");
        }
    }

    #[test]
    fn sample_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let p = strat(&[0.6, 0.3, 0.1], 1);
        let d = decompose(&p).unwrap();
        let hits = (0..draws).filter(|_| sample_from(&d, &mut rng).is_selected(0)).count();
        assert!((hits as f64 / draws as f64 - 0.6).abs() < 0.005);

        let p = strat(&[0.5, 0.5], 1);
        let d = decompose(&p).unwrap();
        let hits = (0..draws).filter(|_| sample_from(&d, &mut rng).is_selected(0)).count();
        assert!((hits as f64 / draws as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn split_load_examples() {
        let bits = |x: &[usize], q: usize, r: usize| -> Vec<String> {
            let lv = LoadVector::new(x.to_vec(), q, r).unwrap();
            split_load(&lv, r).unwrap().iter().map(PureAction::bitstring).collect()
        };
        assert_eq!(bits(&[2, 0], 2, 1), vec!["10", "10"]);
        assert_eq!(bits(&[1, 1], 2, 1), vec!["10", "01"]);
        assert_eq!(bits(&[2, 1, 1], 2, 2), vec!["110", "101"]);
    }

    #[test]
    fn split_load_rejects_foreign_vectors() {
        let lv = LoadVector::new(vec![2, 0], 2, 1).unwrap();
        assert!(split_load(&lv, 2).is_err());
    }

    #[test]
    fn contains_examples() {
        assert!(contains(&[0.5, 0.5], 1, 1e-9));
        assert!(!contains(&[1.2, -0.2], 1, 1e-9));
        for n in 2..8 {
            for r in 1..n {
                assert!(contains(&vec![r as f64 / n as f64; n], r, 1e-9));
            }
        }
    }
}
