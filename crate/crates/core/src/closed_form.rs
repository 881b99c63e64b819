//! Explicit maximisers of `f^worst` for the three solvable families:
//! two players with one pick, three players with one pick, and two players
//! with `r` picks.
//!
//! Every solver sorts the means in decreasing order (ties keep the caller's
//! order), removes zero means, solves on the reduced instance and maps the
//! answer back. The `order` field of [`ClosedFormResult`] records the sorted
//! order so callers can inspect the reduction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{f_worst, GameSpec, MixedStrategy};
use crate::maximin::{solve_maximin, SolverConfig};

/// Integrality slack for the second genericity assumption.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-12;

/// Accuracy of the subgradient fallback used when the general two-player
/// closed form does not apply.
pub const FALLBACK_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormResult {
    pub strategy: MixedStrategy,
    pub value: f64,
    pub case_tag: String,
    /// `order[i]` is the caller's index of the `i`-th largest mean.
    pub order: Vec<usize>,
    /// Zero for exact solutions; the subgradient certificate on fallback.
    pub error_bound: f64,
}

impl ClosedFormResult {
    pub fn is_fallback(&self) -> bool {
        self.case_tag == "fallback"
    }
}

/// Indices sorted by decreasing mean; equal means keep their relative order.
pub fn sorted_order(means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&i, &j| means[j].total_cmp(&means[i]));
    order
}

struct Reduced {
    order: Vec<usize>,
    /// Positive means, sorted.
    means: Vec<f64>,
}

fn reduce(spec: &GameSpec) -> Reduced {
    let order = sorted_order(spec.means());
    let means = order
        .iter()
        .map(|&i| spec.means()[i])
        .take_while(|&e| e > 0.0)
        .collect();
    Reduced { order, means }
}

impl Reduced {
    /// Scatters probabilities over the positive prefix back to caller order.
    fn expand(&self, probs: &[f64], r: usize) -> Result<MixedStrategy> {
        let mut out = vec![0.0; self.order.len()];
        for (i, &p) in probs.iter().enumerate() {
            out[self.order[i]] = p;
        }
        MixedStrategy::new(out, r)
    }

    /// Fewer positive means than picks: take all of them, fill the rest of
    /// the picks with zero-mean resources of lowest index.
    fn degenerate(&self, spec: &GameSpec) -> Result<ClosedFormResult> {
        let mut probs = vec![0.0; spec.n()];
        for &i in &self.order[..self.means.len()] {
            probs[i] = 1.0;
        }
        let mut zeros: Vec<usize> = self.order[self.means.len()..].to_vec();
        zeros.sort_unstable();
        for &i in zeros.iter().take(spec.r() - self.means.len()) {
            probs[i] = 1.0;
        }
        let strategy = MixedStrategy::new(probs, spec.r())?;
        let (value, _) = f_worst(&strategy, spec)?;
        Ok(ClosedFormResult {
            strategy,
            value,
            case_tag: "degenerate".into(),
            order: self.order.clone(),
            error_bound: 0.0,
        })
    }
}

fn require(spec: &GameSpec, m: usize, r: Option<usize>) -> Result<()> {
    if spec.m() != m || r.is_some_and(|r| spec.r() != r) {
        return Err(Error::WrongCase(format!(
            "solver needs m = {m}{}, got m = {}, r = {}",
            r.map(|r| format!(", r = {r}")).unwrap_or_default(),
            spec.m(),
            spec.r()
        )));
    }
    Ok(())
}

fn require_sorted_positive(means: &[f64]) -> Result<()> {
    if let Some(i) = means.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter(format!("mean E_{} = {} must be positive", i + 1, means[i])));
    }
    if let Some(i) = means.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(format!("means must be non-increasing at index {}", i + 1)));
    }
    Ok(())
}

/// Two players, one pick each.
pub fn solve_m2_r1(spec: &GameSpec) -> Result<ClosedFormResult> {
    require(spec, 2, Some(1))?;
    let red = reduce(spec);
    if red.means.len() <= 1 {
        return red.degenerate(spec);
    }
    let mut inv_sum = 0.0;
    let mut best = (0usize, f64::NEG_INFINITY, 0.0);
    for (k, e) in red.means.iter().enumerate() {
        inv_sum += 1.0 / e;
        let score = (k as f64 + 0.5) / inv_sum;
        if score > best.1 {
            best = (k + 1, score, inv_sum);
        }
    }
    let (u, value, total) = best;
    let probs: Vec<f64> = red.means[..u].iter().map(|e| 1.0 / (e * total)).collect();
    Ok(ClosedFormResult {
        strategy: red.expand(&probs, 1)?,
        value,
        case_tag: format!("m2-r1(u={u})"),
        order: red.order,
        error_bound: 0.0,
    })
}

/// The two sequences that decide support size and case for three players.
/// `u_seq[i - 1] = U_i` for `i in 1..=n`, `v_seq[i - 2] = V_i` for `i in 2..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencesUV {
    pub u_seq: Vec<f64>,
    pub v_seq: Vec<f64>,
    /// 1-based argmax of `U` (lowest index on ties).
    pub u: usize,
    /// 1-based argmax of `V` (lowest index on ties).
    pub v: usize,
}

impl SequencesUV {
    pub fn u_max(&self) -> f64 {
        self.u_seq[self.u - 1]
    }

    pub fn v_max(&self) -> f64 {
        self.v_seq[self.v - 2]
    }
}

fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `U_i` and `V_i` for means sorted in decreasing order, all positive,
/// at least two of them.
pub fn sequences_uv(sorted_means: &[f64]) -> Result<SequencesUV> {
    require_sorted_positive(sorted_means)?;
    if sorted_means.len() < 2 {
        return Err(Error::InvalidParameter("need at least two positive means".into()));
    }
    let first = 1.0 / sorted_means[0];
    let mut tail = 0.0;
    let mut u_seq = Vec::with_capacity(sorted_means.len());
    let mut v_seq = Vec::with_capacity(sorted_means.len() - 1);
    for (k, e) in sorted_means.iter().enumerate() {
        if k > 0 {
            tail += 1.0 / e;
        }
        let i = (k + 1) as f64;
        u_seq.push(i / (3.0 * first + tail));
        if k > 0 {
            v_seq.push((i - 1.0) / (first + tail));
        }
    }
    let u = first_argmax(&u_seq) + 1;
    let v = first_argmax(&v_seq) + 2;
    Ok(SequencesUV { u_seq, v_seq, u, v })
}

/// Three players, one pick each.
pub fn solve_m3_r1(spec: &GameSpec) -> Result<ClosedFormResult> {
    require(spec, 3, Some(1))?;
    let red = reduce(spec);
    if red.means.len() <= 1 {
        return red.degenerate(spec);
    }
    let seq = sequences_uv(&red.means)?;
    let (probs, value, tag) = if seq.v_max() > seq.u_max() {
        let support = &red.means[..seq.v];
        let total: f64 = support.iter().map(|e| 1.0 / e).sum();
        let probs = support.iter().map(|e| 1.0 / (e * total)).collect::<Vec<_>>();
        (probs, seq.v_max(), format!("m3-r1 case 1 (v={})", seq.v))
    } else {
        let support = &red.means[..seq.u];
        let total = 3.0 / support[0] + support[1..].iter().map(|e| 1.0 / e).sum::<f64>();
        let mut probs: Vec<f64> = support.iter().map(|e| 1.0 / (e * total)).collect();
        probs[0] *= 3.0;
        (probs, seq.u_max(), format!("m3-r1 case 2 (u={})", seq.u))
    };
    Ok(ClosedFormResult {
        strategy: red.expand(&probs, 1)?,
        value,
        case_tag: tag,
        order: red.order,
        error_bound: 0.0,
    })
}

fn top_two(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut g1 = f64::NEG_INFINITY;
    let mut g2 = f64::NEG_INFINITY;
    for v in values {
        if v > g1 {
            g2 = g1;
            g1 = v;
        } else if v > g2 {
            g2 = v;
        }
    }
    (g1, g2)
}

/// `f^worst` for three players with one pick, from the two largest
/// weighted probabilities `G1 >= G2`.
pub fn f_worst_m3_r1(p: &MixedStrategy, spec: &GameSpec) -> Result<f64> {
    require(spec, 3, Some(1))?;
    spec.check_len(p.n())?;
    let weighted = p.probs().iter().zip(spec.means()).map(|(p, e)| p * e);
    let total: f64 = weighted.clone().sum();
    let (g1, g2) = top_two(weighted);
    Ok(if g1 > 3.0 * g2 {
        total - 2.0 / 3.0 * g1
    } else {
        total - g1 / 2.0 - g2 / 2.0
    })
}

/// `f^worst` for two players: the opponent halves the `r` largest weights.
pub fn f_worst_m2(p: &MixedStrategy, spec: &GameSpec) -> Result<f64> {
    require(spec, 2, None)?;
    spec.check_len(p.n())?;
    Ok(f_worst_m2_raw(p.probs(), spec.means(), spec.r()))
}

fn f_worst_m2_raw(probs: &[f64], means: &[f64], r: usize) -> f64 {
    let mut weighted: Vec<f64> = probs.iter().zip(means).map(|(p, e)| p * e).collect();
    let total: f64 = weighted.iter().sum();
    weighted.sort_by(|a, b| b.total_cmp(a));
    total - 0.5 * weighted[..r].iter().sum::<f64>()
}

/// Sorted positive means with prefix sums of reciprocals.
struct Harmonic<'a> {
    means: &'a [f64],
    r: usize,
    prefix: Vec<f64>,
}

impl<'a> Harmonic<'a> {
    fn new(means: &'a [f64], r: usize) -> Result<Self> {
        require_sorted_positive(means)?;
        if r == 0 || r >= means.len() {
            return Err(Error::InvalidParameter(format!("need 0 < r < n, got r = {r}, n = {}", means.len())));
        }
        let mut prefix = Vec::with_capacity(means.len() + 1);
        prefix.push(0.0);
        for e in means {
            prefix.push(prefix.last().unwrap() + 1.0 / e);
        }
        Ok(Self { means, r, prefix })
    }

    fn n(&self) -> usize {
        self.means.len()
    }

    /// 1-based mean.
    fn e(&self, k: usize) -> f64 {
        self.means[k - 1]
    }

    /// `sum_{i=a..=b} 1 / E_i`, zero for an empty range.
    fn s(&self, a: usize, b: usize) -> f64 {
        if b < a {
            0.0
        } else {
            self.prefix[b] - self.prefix[a - 1]
        }
    }

    fn delta(&self, a: usize, b: usize, c: usize) -> f64 {
        self.r as f64 - a as f64 + b as f64 - c as f64
    }

    fn good(&self, a: usize, b: usize, c: usize) -> bool {
        self.delta(a, b, c) < self.e(b) * self.s(a + 1, b)
    }

    fn check_indices(&self, a: usize, b: usize, c: usize) -> Result<()> {
        let (r, n) = (self.r, self.n());
        if a >= r || !(r + 1..=n).contains(&b) || !(r + 1..=n).contains(&c) {
            return Err(Error::InvalidParameter(format!(
                "triplet ({a},{b},{c}) outside [0:{}] x [{}:{n}] x [{}:{n}]",
                r - 1,
                r + 1,
                r + 1
            )));
        }
        Ok(())
    }

    fn assumptions(&self) -> Result<()> {
        if let Some(i) = self.means.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::AssumptionViolated(format!("means {} and {} coincide", i + 1, i + 2)));
        }
        for a in 1..=self.r {
            for b in self.r + 1..=self.n() {
                let x = self.e(b) * self.s(a, b);
                if (x - x.round()).abs() <= INTEGRALITY_TOLERANCE {
                    return Err(Error::AssumptionViolated(format!("E_{b} S_({a},{b}) = {x} is an integer")));
                }
            }
        }
        Ok(())
    }

    fn h(&self, a: usize, c: usize) -> usize {
        (self.r + 1..=self.n()).rev().find(|&b| self.good(a, b, c)).unwrap_or(self.r)
    }

    fn e_fn(&self, a: usize, b: usize) -> usize {
        (self.r + 1..=self.n()).find(|&c| self.good(a, b, c)).unwrap_or(self.n() + 1)
    }

    fn g(&self, b: usize, c: usize) -> usize {
        (0..self.r).find(|&a| self.good(a, b, c)).unwrap_or(self.r)
    }
}

/// An index triple for two players with `r` picks, with `a in [0:r-1]` and
/// `b, c in [r+1:n]`, 1-based on the sorted means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub good: bool,
}

/// Classifies `(a, b, c)` as good when `r - a + b - c < E_b S_{a+1,b}`.
/// `sorted_means` must be positive and non-increasing.
pub fn classify_triplet(a: usize, b: usize, c: usize, sorted_means: &[f64], r: usize) -> Result<Triplet> {
    let h = Harmonic::new(sorted_means, r)?;
    h.check_indices(a, b, c)?;
    Ok(Triplet { a, b, c, good: h.good(a, b, c) })
}

/// `h(a, c)`, `e(a, b)` and `g(b, c)` tabulated over their domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTables {
    n: usize,
    r: usize,
    h: Vec<usize>,
    e: Vec<usize>,
    g: Vec<usize>,
}

impl BoundaryTables {
    fn tail(&self, k: usize) -> usize {
        assert!((self.r + 1..=self.n).contains(&k), "index {k} outside [{}:{}]", self.r + 1, self.n);
        k - self.r - 1
    }

    fn width(&self) -> usize {
        self.n - self.r
    }

    /// Largest `b` making `(a, b, c)` good, `r` if there is none.
    pub fn h(&self, a: usize, c: usize) -> usize {
        assert!(a < self.r);
        self.h[a * self.width() + self.tail(c)]
    }

    /// Smallest `c` making `(a, b, c)` good, `n + 1` if there is none.
    pub fn e(&self, a: usize, b: usize) -> usize {
        assert!(a < self.r);
        self.e[a * self.width() + self.tail(b)]
    }

    /// Smallest `a` making `(a, b, c)` good, `r` if there is none.
    pub fn g(&self, b: usize, c: usize) -> usize {
        self.g[self.tail(b) * self.width() + self.tail(c)]
    }
}

/// Tabulates the boundary functions. Fails with
/// [`Error::AssumptionViolated`] when two means coincide or some
/// `E_b S_{a,b}` (`a <= r < b`) is an integer.
pub fn boundary_functions(sorted_means: &[f64], r: usize) -> Result<BoundaryTables> {
    let hm = Harmonic::new(sorted_means, r)?;
    hm.assumptions()?;
    Ok(tables(&hm))
}

fn tables(hm: &Harmonic) -> BoundaryTables {
    let (n, r) = (hm.n(), hm.r);
    let tail = r + 1..=n;
    let mut h = Vec::with_capacity(r * (n - r));
    let mut e = Vec::with_capacity(r * (n - r));
    for a in 0..r {
        for k in tail.clone() {
            h.push(hm.h(a, k));
            e.push(hm.e_fn(a, k));
        }
    }
    let mut g = Vec::with_capacity((n - r) * (n - r));
    for b in tail.clone() {
        for c in tail.clone() {
            g.push(hm.g(b, c));
        }
    }
    BoundaryTables { n, r, h, e, g }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateLabel {
    P0,
    X1 { a: usize, c: usize },
    X2 { a: usize, b: usize },
    X3 { b: usize, c: usize },
}

impl fmt::Display for CandidateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateLabel::P0 => write!(f, "P0"),
            CandidateLabel::X1 { a, c } => write!(f, "X1({a},{c})"),
            CandidateLabel::X2 { a, b } => write!(f, "X2({a},{b})"),
            CandidateLabel::X3 { b, c } => write!(f, "X3({b},{c})"),
        }
    }
}

/// One element of the finite candidate set, in sorted coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateStrategy {
    pub label: CandidateLabel,
    pub strategy: MixedStrategy,
    /// Separation level: `p_j E_j >= gamma` for `j <= r`, `gamma >= p_t E_t` otherwise.
    pub gamma: f64,
    /// Two-player `f^worst` of `strategy`.
    pub objective: f64,
}

/// Every candidate maximiser for two players with `r` picks on sorted,
/// positive, pairwise distinct means.
pub fn candidates(sorted_means: &[f64], r: usize) -> Result<Vec<CandidateStrategy>> {
    let hm = Harmonic::new(sorted_means, r)?;
    hm.assumptions()?;
    let t = tables(&hm);
    build_candidates(&hm, &t)
}

fn build_candidates(hm: &Harmonic, t: &BoundaryTables) -> Result<Vec<CandidateStrategy>> {
    let (n, r) = (hm.n(), hm.r);
    let mut out = Vec::new();
    let mut push = |label: CandidateLabel, probs: Vec<f64>, gamma: f64| -> Result<()> {
        let objective = f_worst_m2_raw(&probs, hm.means, r);
        let strategy = MixedStrategy::new(probs, r)
            .map_err(|e| Error::Internal(format!("candidate {label} infeasible: {e}")))?;
        out.push(CandidateStrategy { label, strategy, gamma, objective });
        Ok(())
    };

    let mut p0 = vec![0.0; n];
    p0[..r].fill(1.0);
    push(CandidateLabel::P0, p0, hm.e(r + 1))?;

    for a in 0..r {
        for c in r + 1..=n {
            let h = t.h(a, c);
            if h <= r {
                continue;
            }
            let b = h.min(c);
            let level = hm.delta(a, b, c) / hm.s(a + 1, b);
            let mut p = vec![0.0; n];
            p[..a].fill(1.0);
            for k in a + 1..=b {
                p[k - 1] = level / hm.e(k);
            }
            p[b..c].fill(1.0);
            push(CandidateLabel::X1 { a, c }, p, level)?;
        }
        for b in r + 1..=n {
            let c = t.e(a, b);
            if !(b < c && c <= n) {
                continue;
            }
            let eb = hm.e(b);
            let mut p = vec![0.0; n];
            p[..a].fill(1.0);
            for k in a + 1..=b {
                p[k - 1] = eb / hm.e(k);
            }
            p[b..c - 1].fill(1.0);
            p[c - 1] = hm.delta(a, b, c) - eb * hm.s(a + 1, b - 1);
            push(CandidateLabel::X2 { a, b }, p, eb)?;
        }
    }
    for b in r + 1..=n {
        for c in b..=n {
            let a = t.g(b, c);
            if !(0 < a && a < r) {
                continue;
            }
            let eb = hm.e(b);
            let mut p = vec![0.0; n];
            p[..a - 1].fill(1.0);
            p[a - 1] = hm.delta(a, b, c) - eb * hm.s(a + 1, b - 1);
            for k in a + 1..=b {
                p[k - 1] = eb / hm.e(k);
            }
            p[b..c].fill(1.0);
            push(CandidateLabel::X3 { b, c }, p, eb)?;
        }
    }
    Ok(out)
}

/// Two players with any number of picks. Falls back to the subgradient
/// solver (tag `"fallback"`) when the means are not generic.
pub fn solve_m2_general(spec: &GameSpec) -> Result<ClosedFormResult> {
    require(spec, 2, None)?;
    let r = spec.r();
    let red = reduce(spec);
    if red.means.len() <= r {
        return red.degenerate(spec);
    }
    let hm = Harmonic::new(&red.means, r)?;
    if hm.assumptions().is_err() {
        return fallback(spec, red.order);
    }
    let t = tables(&hm);
    let cands = build_candidates(&hm, &t)?;
    let best = cands
        .iter()
        .fold(None::<&CandidateStrategy>, |best, c| match best {
            Some(b) if c.objective <= b.objective => Some(b),
            _ => Some(c),
        })
        .expect("the candidate set always contains P0");
    Ok(ClosedFormResult {
        strategy: red.expand(best.strategy.probs(), r)?,
        value: best.objective,
        case_tag: format!("m2-general {}", best.label),
        order: red.order,
        error_bound: 0.0,
    })
}

fn fallback(spec: &GameSpec, order: Vec<usize>) -> Result<ClosedFormResult> {
    let res = solve_maximin(spec, &SolverConfig::from_epsilon(FALLBACK_EPSILON)?)?;
    Ok(ClosedFormResult {
        strategy: res.strategy,
        value: res.value,
        case_tag: "fallback".into(),
        order,
        error_bound: res.error_bound,
    })
}

/// Whether one of the explicit solvers covers `(m, r)`.
pub fn has_closed_form(spec: &GameSpec) -> bool {
    spec.m() == 2 || (spec.m() == 3 && spec.r() == 1)
}

/// Dispatches to the matching explicit solver.
pub fn solve_closed_form(spec: &GameSpec) -> Result<ClosedFormResult> {
    match (spec.m(), spec.r()) {
        (2, 1) => solve_m2_r1(spec),
        (2, _) => solve_m2_general(spec),
        (3, 1) => solve_m3_r1(spec),
        (m, r) => Err(Error::WrongCase(format!("no closed form for m = {m}, r = {r}"))),
    }
}
