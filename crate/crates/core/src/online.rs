//! Repeated play with unknown means: a UCB learner that runs projected
//! gradient ascent on optimistic estimates, plus worst-case regret accounting.
//!
//! The learner only sees the rewards `W_k[t] = E_k + noise` of the resources it
//! picks. Regret is measured against the one-shot game value through
//! `f^worst(p[t])` on the true means, so no opponents need to be simulated.
//! An [`OpponentPolicy`] can still be attached to report a realised payoff.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::best_response::greedy_loads;
use crate::closed_form::{has_closed_form, solve_closed_form};
use crate::error::{Error, Result};
use crate::game::{utility_raw, GameSpec, MixedStrategy, PureAction};
use crate::hypersimplex::{project, sample};
use crate::maximin::{solve_maximin, SolverConfig};

/// Accuracy of the subgradient reference when no closed form applies.
pub const REFERENCE_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Gaussian { sigma: f64 },
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// `sigma * (sqrt(rho) Z_0 + sqrt(1 - rho) Z_k)` with a common `Z_0` per slot.
    CorrelatedGaussian { sigma: f64, rho: f64 },
}

/// Zero-mean, 1-sub-Gaussian reward noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match kind {
            NoiseKind::None => {}
            NoiseKind::Gaussian { sigma } if !(0.0..=1.0).contains(&sigma) => {
                return bad(format!("gaussian sigma must lie in [0, 1], got {sigma}"))
            }
            NoiseKind::Uniform { half_width } if !(0.0..=3f64.sqrt()).contains(&half_width) => {
                return bad(format!("uniform half-width must lie in [0, sqrt 3], got {half_width}"))
            }
            NoiseKind::CorrelatedGaussian { sigma, rho }
                if !(0.0..=1.0).contains(&sigma) || !(0.0..=1.0).contains(&rho) =>
            {
                return bad(format!("correlated gaussian needs sigma, rho in [0, 1], got {sigma}, {rho}"))
            }
            _ => {}
        }
        Ok(Self { kind, seed })
    }

    pub fn none(seed: u64) -> Self {
        Self { kind: NoiseKind::None, seed }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian { sigma }, seed)
    }

    /// One slot of noise for every resource.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.kind {
            NoiseKind::None => out.fill(0.0),
            NoiseKind::Gaussian { sigma } => {
                for v in out.iter_mut() {
                    *v = sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            NoiseKind::Uniform { half_width } => {
                for v in out.iter_mut() {
                    *v = half_width * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            NoiseKind::CorrelatedGaussian { sigma, rho } => {
                let common = rng.sample::<f64, _>(StandardNormal) * rho.sqrt();
                let own = (1.0 - rho).sqrt();
                for v in out.iter_mut() {
                    *v = sigma * (common + own * rng.sample::<f64, _>(StandardNormal));
                }
            }
        }
    }
}

/// Learner state at the start of slot `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbState {
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    pub strategy: MixedStrategy,
    pub t: usize,
}

impl UcbState {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        Ok(Self {
            counts: vec![0; n],
            means: vec![0.0; n],
            strategy: MixedStrategy::uniform(n, r)?,
            t: 1,
        })
    }

    /// Folds in the rewards of one slot; `rewards[k]` is read for selected `k` only.
    pub fn observe(&mut self, action: &PureAction, rewards: &[f64]) {
        for k in action.selected() {
            self.counts[k] += 1;
            self.means[k] += (rewards[k] - self.means[k]) / self.counts[k] as f64;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcbParams {
    pub horizon: usize,
    pub delta: f64,
    pub beta: f64,
    pub cap: f64,
}

impl UcbParams {
    pub fn new(horizon: usize, delta: f64, beta: f64, cap: f64) -> Result<Self> {
        let params = Self { horizon, delta, beta, cap };
        params.validate()?;
        Ok(params)
    }

    /// `delta = 1 / (2 n r C T^2)` and `beta = 1 / (sqrt(T) D)`.
    pub fn theoretical(spec: &GameSpec, horizon: usize) -> Result<Self> {
        let t = horizon as f64;
        let cap = spec.cap();
        let delta = 1.0 / (2.0 * spec.n() as f64 * spec.r() as f64 * cap * t * t);
        let mut params = Self { horizon, delta, beta: 1.0, cap };
        params.validate()?;
        params.beta = 1.0 / (t.sqrt() * params.diameter());
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.cap >= 0.0) || !self.cap.is_finite() {
            return Err(Error::InvalidParameter(format!("cap must be non-negative, got {}", self.cap)));
        }
        Ok(())
    }

    /// `2 log(T (T + 1) / delta)`.
    pub fn log_term(&self) -> f64 {
        let t = self.horizon as f64;
        2.0 * (t * (t + 1.0) / self.delta).ln()
    }

    /// `C + 2 sqrt(2 log(T (T + 1) / delta))`.
    pub fn diameter(&self) -> f64 {
        self.cap + 2.0 * self.log_term().sqrt()
    }

    /// `None` when the confidence radius at one sample covers the cap.
    pub fn horizon_warning(&self) -> Option<String> {
        let radius = self.log_term().sqrt();
        (radius < self.cap).then(|| {
            format!("horizon too short: confidence radius {radius} is below the reward cap {}", self.cap)
        })
    }
}

/// `mean_k + sqrt(2 log(T (T + 1) / delta) / max(n_k, 1))`.
pub fn ucb_index(state: &UcbState, params: &UcbParams, k: usize) -> Result<f64> {
    params.validate()?;
    if k >= state.counts.len() {
        return Err(Error::DimensionMismatch { expected: state.counts.len(), got: k + 1 });
    }
    Ok(index_unchecked(state, params.log_term(), k))
}

fn index_unchecked(state: &UcbState, log_term: f64, k: usize) -> f64 {
    state.means[k] + (log_term / state.counts[k].max(1) as f64).sqrt()
}

/// The game value used as the regret baseline. The true value lies in
/// `[value, value + tolerance]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximinReference {
    pub value: f64,
    pub tolerance: f64,
    pub method: String,
}

impl MaximinReference {
    pub fn compute(spec: &GameSpec) -> Result<Self> {
        if has_closed_form(spec) {
            let res = solve_closed_form(spec)?;
            let method = if res.is_fallback() { "fallback" } else { "closed-form" };
            return Ok(Self { value: res.value, tolerance: res.error_bound, method: method.into() });
        }
        let res = solve_maximin(spec, &SolverConfig::from_epsilon(REFERENCE_EPSILON)?)?;
        Ok(Self { value: res.value, tolerance: res.error_bound, method: "gradient".into() })
    }

    pub fn exact(value: f64) -> Self {
        Self { value, tolerance: 0.0, method: "given".into() }
    }
}

/// Opponent behaviour used only for the realised-payoff column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentPolicy {
    #[default]
    None,
    WorstCase,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub strategy: Vec<f64>,
    pub action: PureAction,
    /// `W_k[t]` for the selected resources, in index order.
    pub observed: Vec<f64>,
    /// Optimistic means used in this slot.
    pub index: Vec<f64>,
    pub f_worst: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub observed_payoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub spec: GameSpec,
    pub params: UcbParams,
    pub noise: NoiseModel,
    pub opponent: OpponentPolicy,
    pub reference: MaximinReference,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub metadata: TraceMetadata,
    pub steps: Vec<StepRecord>,
}

impl RegretTrace {
    /// `R[T]`, zero for an empty trace.
    pub fn cum_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }

    /// Appends `other`, renumbering its slots and carrying the cumulative sum.
    pub fn concat(mut self, other: RegretTrace) -> RegretTrace {
        let offset_t = self.steps.len();
        let offset_r = self.cum_regret();
        for mut step in other.steps {
            step.t += offset_t;
            step.cum_regret += offset_r;
            self.steps.push(step);
        }
        for w in other.metadata.warnings {
            if !self.metadata.warnings.contains(&w) {
                self.metadata.warnings.push(w);
            }
        }
        self
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.steps
            .iter()
            .map(|s| TraceRow {
                t: s.t,
                strategy: s.strategy.clone(),
                action: s.action.bitstring(),
                f_worst: s.f_worst,
                inst_regret: s.inst_regret,
                cum_regret: s.cum_regret,
                observed_payoff: s.observed_payoff,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.rows(), self.metadata.spec.n(), self.metadata.opponent != OpponentPolicy::None, out)
    }

    /// Writes `<stem>.csv` and `<stem>.json` (metadata) into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        let json = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
        Ok(())
    }
}

/// One CSV line of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub strategy: Vec<f64>,
    pub action: String,
    pub f_worst: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub observed_payoff: Option<f64>,
}

fn write_rows<W: Write>(rows: &[TraceRow], n: usize, payoff: bool, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("p_{k}")));
    header.extend(["action", "f_worst", "inst_regret", "cum_regret"].map(String::from));
    if payoff {
        header.push("observed_payoff".into());
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.t.to_string()];
        rec.extend(row.strategy.iter().map(|p| p.to_string()));
        rec.push(row.action.clone());
        rec.extend([row.f_worst, row.inst_regret, row.cum_regret].map(|v| v.to_string()));
        if payoff {
            rec.push(row.observed_payoff.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trace CSV written by [`RegretTrace::write_csv`].
pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with("p_")).count();
    let payoff = header.iter().any(|h| h == "observed_payoff");
    let expected = 1 + n + 4 + usize::from(payoff);
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Io(format!("bad number {s:?}: {e}")));
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != expected {
            return Err(Error::Io(format!("expected {expected} fields, got {}", rec.len())));
        }
        let t = rec[0].parse::<usize>().map_err(|e| Error::Io(format!("bad slot {:?}: {e}", &rec[0])))?;
        let strategy = (1..=n).map(|i| num(&rec[i])).collect::<Result<Vec<_>>>()?;
        let observed_payoff = match payoff {
            true if !rec[n + 5].is_empty() => Some(num(&rec[n + 5])?),
            _ => None,
        };
        rows.push(TraceRow {
            t,
            strategy,
            action: rec[n + 1].to_string(),
            f_worst: num(&rec[n + 2])?,
            inst_regret: num(&rec[n + 3])?,
            cum_regret: num(&rec[n + 4])?,
            observed_payoff,
        });
    }
    Ok(rows)
}

/// Runs the learner for `params.horizon` slots against the computed game value.
pub fn run_ucb(spec: &GameSpec, params: &UcbParams, noise: &NoiseModel) -> Result<RegretTrace> {
    let reference = MaximinReference::compute(spec)?;
    simulate(spec, params, noise, &reference, OpponentPolicy::None)
}

/// [`run_ucb`] with an explicit baseline and an optional opponent model.
/// The opponent draws from its own random stream, so the learner's trajectory
/// does not depend on `opponent`.
pub fn simulate(
    spec: &GameSpec,
    params: &UcbParams,
    noise: &NoiseModel,
    reference: &MaximinReference,
    opponent: OpponentPolicy,
) -> Result<RegretTrace> {
    params.validate()?;
    let n = spec.n();
    let r = spec.r();
    let q = spec.m() - 1;
    let means = spec.means();
    let log_term = params.log_term();

    let mut warnings = Vec::new();
    if let Some(w) = params.horizon_warning() {
        log::warn!("{w}");
        warnings.push(w);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut opp_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    opp_rng.set_stream(1);

    let mut state = UcbState::new(n, r)?;
    let mut steps = Vec::with_capacity(params.horizon);
    let mut eta = vec![0.0; n];
    let mut rewards = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut ascent = vec![0.0; n];
    let mut cum = 0.0;

    for t in 1..=params.horizon {
        state.t = t;
        let p = state.strategy.probs();

        for k in 0..n {
            weights[k] = p[k] * means[k];
        }
        let worst_loads = greedy_loads(&weights, q, r);
        let fw = utility_raw(means, p, &worst_loads);
        let inst = reference.value - fw;
        cum += inst;

        let index: Vec<f64> = (0..n).map(|k| index_unchecked(&state, log_term, k)).collect();
        for k in 0..n {
            weights[k] = p[k] * index[k];
        }
        let loads = greedy_loads(&weights, q, r);

        let action = sample(&state.strategy, &mut rng)?;
        noise.draw(&mut rng, &mut eta);
        for k in 0..n {
            rewards[k] = means[k] + eta[k];
        }

        let observed_payoff = match opponent {
            OpponentPolicy::None => None,
            OpponentPolicy::WorstCase => Some(realised(&action, &rewards, &worst_loads)),
            OpponentPolicy::UniformRandom => {
                let mut x = vec![0usize; n];
                for _ in 0..q {
                    for k in index::sample(&mut opp_rng, n, r) {
                        x[k] += 1;
                    }
                }
                Some(realised(&action, &rewards, &x))
            }
        };

        for k in 0..n {
            ascent[k] = p[k] + params.beta * index[k] / (1.0 + loads[k] as f64);
        }
        let observed = action.selected().map(|k| rewards[k]).collect();
        steps.push(StepRecord {
            t,
            strategy: p.to_vec(),
            action: action.clone(),
            observed,
            index,
            f_worst: fw,
            inst_regret: inst,
            cum_regret: cum,
            observed_payoff,
        });

        state.observe(&action, &rewards);
        state.strategy = project(&ascent, r)?;
    }

    Ok(RegretTrace {
        metadata: TraceMetadata {
            spec: spec.clone(),
            params: *params,
            noise: *noise,
            opponent,
            reference: reference.clone(),
            warnings,
        },
        steps,
    })
}

fn realised(action: &PureAction, rewards: &[f64], opponents: &[usize]) -> f64 {
    action.selected().map(|k| rewards[k] / (1.0 + opponents[k] as f64)).sum()
}

/// Cumulative regret of `strategies` against `reference`.
pub fn regret_of_strategies(strategies: &[MixedStrategy], spec: &GameSpec, reference: f64) -> Result<f64> {
    let mut total = 0.0;
    for p in strategies {
        total += reference - crate::game::f_worst(p, spec)?.0;
    }
    Ok(total)
}

/// Recomputes `R[T]` of a trace from its strategies against a freshly solved
/// game value.
pub fn regret_of(trace: &RegretTrace, spec: &GameSpec) -> Result<f64> {
    let reference = MaximinReference::compute(spec)?;
    let strategies = trace
        .steps
        .iter()
        .map(|s| MixedStrategy::new(s.strategy.clone(), spec.r()))
        .collect::<Result<Vec<_>>>()?;
    regret_of_strategies(&strategies, spec, reference.value)
}

/// `n D sqrt(T) + 4 n sqrt(2 r T log(2 n r C T^3 (T + 1))) + 1` with
/// `D = C + 2 sqrt(2 log(2 n r C T^3 (T + 1)))`.
pub fn theoretical_regret_bound(spec: &GameSpec, horizon: usize) -> Result<f64> {
    let (n, r, c, t) = (spec.n() as f64, spec.r() as f64, spec.cap(), horizon as f64);
    let delta = 1.0 / (2.0 * n * r * c * t * t);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} too short: confidence level {delta} is not below 1"
        )));
    }
    let log = (2.0 * n * r * c * t.powi(3) * (t + 1.0)).ln();
    let d = c + 2.0 * (2.0 * log).sqrt();
    Ok(n * d * t.sqrt() + 4.0 * n * (2.0 * r * t * log).sqrt() + 1.0)
}
