//! Domain types shared by every solver, plus the two central value functions:
//! the expected utility `f(p, x)` of player 1 against an opponent load vector,
//! and its worst case over all opponent loads.

use serde::{Deserialize, Serialize};

use crate::best_response;
use crate::error::{Error, Result};

/// Tolerance on `sum(p) = r` accepted by [`MixedStrategy::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Parameters of a one-slot game: `n` resources with mean rewards `means`,
/// `m` players, each picking `r` distinct resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    m: usize,
    r: usize,
    means: Vec<f64>,
    cap: f64,
}

impl GameSpec {
    /// Validates `n >= 2`, `m >= 2`, `0 < r < n` and `0 <= E_k <= cap`.
    /// When `cap` is `None` it defaults to the largest mean.
    pub fn new(means: Vec<f64>, m: usize, r: usize, cap: Option<f64>) -> Result<Self> {
        let n = means.len();
        if n < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 resources, got {n}")));
        }
        if m < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 players, got {m}")));
        }
        if r == 0 || r >= n {
            return Err(Error::InvalidSpec(format!("picks must satisfy 0 < r < n, got r={r}, n={n}")));
        }
        if let Some(i) = means.iter().position(|e| !e.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = means.iter().position(|&e| e < 0.0) {
            return Err(Error::InvalidSpec(format!("mean E_{} = {} is negative", i + 1, means[i])));
        }
        let max = means.iter().copied().fold(0.0, f64::max);
        let cap = cap.unwrap_or(max);
        if !cap.is_finite() || cap < max {
            return Err(Error::InvalidSpec(format!("cap {cap} is below the largest mean {max}")));
        }
        Ok(Self { m, r, means, cap })
    }

    pub fn n(&self) -> usize {
        self.means.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Same players and picks, different means. The cap is re-derived.
    pub fn with_means(&self, means: Vec<f64>) -> Result<Self> {
        Self::new(means, self.m, self.r, None)
    }

    pub fn with_players(&self, m: usize) -> Result<Self> {
        Self::new(self.means.clone(), m, self.r, Some(self.cap))
    }

    /// Multiplies every mean (and the cap) by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {c}")));
        }
        Self::new(self.means.iter().map(|e| e * c).collect(), self.m, self.r, Some(self.cap * c))
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got });
        }
        Ok(())
    }
}

/// A point of the (n,r)-hypersimplex: marginal selection probabilities of
/// player 1, each in `[0, 1]`, summing to `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    probs: Vec<f64>,
    picks: usize,
}

impl MixedStrategy {
    /// Accepts entries within [`SUM_TOLERANCE`] of `[0, 1]` and sums within
    /// [`SUM_TOLERANCE`] of `r`. Near-feasible inputs are repaired: entries are
    /// clamped, then the residual of the sum is spread in proportion to slack,
    /// which keeps every entry inside `[0, 1]` and zero entries at zero
    /// whenever the support has room.
    pub fn new(probs: Vec<f64>, picks: usize) -> Result<Self> {
        let n = probs.len();
        let fail = |reason: String| Error::NotInHypersimplex { n, r: picks, reason };
        if picks == 0 || picks >= n {
            return Err(fail(format!("picks must satisfy 0 < r < n, got r={picks}")));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = probs
            .iter()
            .position(|&p| p < -SUM_TOLERANCE || p > 1.0 + SUM_TOLERANCE)
        {
            return Err(fail(format!("p_{} = {} outside [0, 1]", i + 1, probs[i])));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - picks as f64).abs() > SUM_TOLERANCE {
            return Err(fail(format!("sum {sum} differs from {picks}")));
        }
        let mut probs: Vec<f64> = probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        let residual = picks as f64 - probs.iter().sum::<f64>();
        if residual != 0.0 {
            // Positive residual fills headroom (1 - p), negative drains mass p.
            // Headroom on the support is used first so zero entries stay zero.
            let mut slack: Vec<f64> = if residual > 0.0 {
                probs.iter().map(|&p| if p > 0.0 { 1.0 - p } else { 0.0 }).collect()
            } else {
                probs.clone()
            };
            if slack.iter().all(|&s| s == 0.0) {
                slack = probs.iter().map(|p| 1.0 - p).collect();
            }
            let total: f64 = slack.iter().sum();
            if total > 0.0 {
                for (p, s) in probs.iter_mut().zip(&slack) {
                    *p = (*p + residual * s / total).clamp(0.0, 1.0);
                }
            }
        }
        Ok(Self { probs, picks })
    }

    /// The centre of the hypersimplex, `[r/n, ..., r/n]`.
    pub fn uniform(n: usize, r: usize) -> Result<Self> {
        Self::new(vec![r as f64 / n as f64; n], r)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn picks(&self) -> usize {
        self.picks
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Aggregate opponent counts: an element of `J_q`, i.e. integers in `[0, q]`
/// summing to `q * r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LoadVector {
    loads: Vec<usize>,
    level: usize,
}

impl LoadVector {
    pub fn new(loads: Vec<usize>, level: usize, r: usize) -> Result<Self> {
        if let Some(i) = loads.iter().position(|&x| x > level) {
            return Err(Error::InvalidLoad(format!(
                "x_{} = {} exceeds level {level}",
                i + 1,
                loads[i]
            )));
        }
        let total: usize = loads.iter().sum();
        if total != level * r {
            return Err(Error::InvalidLoad(format!(
                "loads sum to {total}, expected {level} * {r}"
            )));
        }
        Ok(Self { loads, level })
    }

    pub(crate) fn new_unchecked(loads: Vec<usize>, level: usize) -> Self {
        Self { loads, level }
    }

    pub fn loads(&self) -> &[usize] {
        &self.loads
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n(&self) -> usize {
        self.loads.len()
    }
}

/// One pure action: exactly `r` of the `n` resources selected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PureAction {
    mask: Vec<bool>,
}

impl PureAction {
    pub fn new(mask: Vec<bool>, r: usize) -> Result<Self> {
        let ones = mask.iter().filter(|&&b| b).count();
        if ones != r {
            return Err(Error::InvalidAction(format!("{ones} resources selected, expected {r}")));
        }
        Ok(Self { mask })
    }

    /// Builds the action selecting `indices` (0-based) out of `n`.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in indices {
            if i >= n || mask[i] {
                return Err(Error::InvalidAction(format!("bad or repeated index {i}")));
            }
            mask[i] = true;
        }
        Ok(Self { mask })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn picks(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_selected(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    pub fn indicator(&self) -> Vec<f64> {
        self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// `"0110"`-style rendering, one character per resource.
    pub fn bitstring(&self) -> String {
        self.mask.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mask = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::InvalidAction(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mask })
    }
}

/// Sum of `E_k p_k / (1 + x_k)` for already-validated slices.
pub(crate) fn utility_raw(means: &[f64], probs: &[f64], loads: &[usize]) -> f64 {
    means
        .iter()
        .zip(probs)
        .zip(loads)
        .map(|((e, p), &x)| e * p / (1.0 + x as f64))
        .sum()
}

/// Expected utility of player 1 playing marginals `p` against opponent loads `x`.
pub fn utility_f(p: &MixedStrategy, x: &LoadVector, spec: &GameSpec) -> Result<f64> {
    spec.check_len(p.n())?;
    spec.check_len(x.n())?;
    if p.picks() != spec.r() {
        return Err(Error::NotInHypersimplex {
            n: p.n(),
            r: spec.r(),
            reason: format!("strategy built for r={}", p.picks()),
        });
    }
    Ok(utility_raw(spec.means(), p.probs(), x.loads()))
}

/// Worst-case expected utility: the minimum of `f(p, x)` over `x` in `J_{m-1}`,
/// together with a minimising load vector.
pub fn f_worst(p: &MixedStrategy, spec: &GameSpec) -> Result<(f64, LoadVector)> {
    let br = best_response::greedy_min_load(p, spec)?;
    Ok((br.value, br.loads))
}
