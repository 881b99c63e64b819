use std::io::{Read, Write};
use std::path::Path;

use fairshare::closed_form::{has_closed_form, solve_closed_form};
use fairshare::maximin::{grid_search, grid_slack};
use fairshare::online::{simulate as simulate_trace, MaximinReference, NoiseModel, RegretTrace, UcbParams};
use fairshare::{solve_maximin, theoretical_regret_bound, GameSpec, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Method, NoiseSpec, Opponent, ScenarioConfig};
use crate::error::{CliError, Result};

/// A solved instance as printed by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub method: String,
    pub case_tag: Option<String>,
    pub means: Vec<f64>,
    pub players: usize,
    pub picks: usize,
    pub strategy: Vec<f64>,
    pub value: f64,
    /// `value + error_bound` bounds the game value from above.
    pub error_bound: f64,
}

pub fn solve_spec(spec: &GameSpec, method: Method, epsilon: f64, resolution: f64) -> Result<Solution> {
    let method = match method {
        Method::Auto if has_closed_form(spec) => Method::ClosedForm,
        Method::Auto => Method::Gradient,
        m => m,
    };
    let (name, tag, strategy, value, bound) = match method {
        Method::ClosedForm => {
            let res = solve_closed_form(spec)?;
            ("closed-form", Some(res.case_tag), res.strategy, res.value, res.error_bound)
        }
        Method::Gradient => {
            let res = solve_maximin(spec, &SolverConfig::from_epsilon(epsilon)?)?;
            ("gradient", None, res.strategy, res.value, res.error_bound)
        }
        Method::Grid => {
            let res = grid_search(spec, resolution)?;
            ("grid", None, res.strategy, res.value, grid_slack(spec, resolution))
        }
        Method::Auto => unreachable!(),
    };
    if !value.is_finite() || !bound.is_finite() {
        return Err(CliError::Certificate(format!("non-finite value {value} or bound {bound}")));
    }
    Ok(Solution {
        method: name.into(),
        case_tag: tag,
        means: spec.means().to_vec(),
        players: spec.m(),
        picks: spec.r(),
        strategy: strategy.into_vec(),
        value,
        error_bound: bound,
    })
}

pub fn solve(cfg: &ScenarioConfig, stdout: &mut dyn Write) -> Result<Solution> {
    let spec = cfg.spec()?;
    let sol = solve_spec(&spec, cfg.method(), cfg.epsilon()?, cfg.resolution()?)?;
    let json = serde_json::to_string_pretty(&sol)? + "\n";
    stdout.write_all(json.as_bytes())?;
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("solution.json"), &json)?;
        let mut w = csv_writer(std::fs::File::create(dir.join("solution.csv"))?);
        w.write_record(["k", "mean", "p"])?;
        for (k, (e, p)) in sol.means.iter().zip(&sol.strategy).enumerate() {
            w.write_record([(k + 1).to_string(), e.to_string(), p.to_string()])?;
        }
        w.flush()?;
    }
    Ok(sol)
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub e1: f64,
    pub value: f64,
    pub value_upper: f64,
    pub strategy: Vec<f64>,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

/// Solves the base game for every first-mean value of the configured range.
pub fn sweep_rows(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    let base = cfg.spec()?;
    let range = cfg.e1.ok_or_else(|| CliError::Usage("sweep needs --e1 start:stop:step".into()))?;
    let (method, eps, res) = (cfg.method(), cfg.epsilon()?, cfg.resolution()?);
    let values = range.values();
    pool(cfg.jobs())?.install(|| {
        values
            .par_iter()
            .map(|&e1| {
                let mut means = base.means().to_vec();
                means[0] = e1;
                let spec = GameSpec::new(means, base.m(), base.r(), cfg.cap).map_err(|e| CliError::Usage(e.to_string()))?;
                let sol = solve_spec(&spec, method, eps, res)?;
                Ok(SweepRow { e1, value: sol.value, value_upper: sol.value + sol.error_bound, strategy: sol.strategy })
            })
            .collect()
    })
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], n: usize, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    let mut header: Vec<String> = ["E1", "value", "value_upper"].map(String::from).to_vec();
    header.extend((1..=n).map(|k| format!("p_{k}")));
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = [row.e1, row.value, row.value_upper].iter().map(f64::to_string).collect();
        rec.extend(row.strategy.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let width = reader.headers()?.len();
    if width < 5 {
        return Err(CliError::Usage(format!("sweep file has {width} columns, expected at least 5")));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let nums = rec?
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| CliError::Usage(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(SweepRow { e1: nums[0], value: nums[1], value_upper: nums[2], strategy: nums[3..].to_vec() });
    }
    Ok(rows)
}

pub fn sweep(cfg: &ScenarioConfig, stdout: &mut dyn Write) -> Result<Vec<SweepRow>> {
    let rows = sweep_rows(cfg)?;
    let n = cfg.spec()?.n();
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_sweep_csv(&rows, n, std::fs::File::create(dir.join("sweep.csv"))?)?;
        }
        None => write_sweep_csv(&rows, n, &mut *stdout)?,
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub means: Vec<f64>,
    pub players: usize,
    pub picks: usize,
    pub cap: f64,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub noise: NoiseSpec,
    pub opponent: Opponent,
    pub delta: f64,
    pub beta: f64,
    pub reference: MaximinReference,
    /// Final cumulative regret per seed.
    pub final_regret: Vec<f64>,
    pub mean_regret: f64,
    pub max_regret: f64,
    pub bound: Option<f64>,
    pub bound_satisfied: Option<bool>,
    pub warnings: Vec<String>,
}

fn ucb_params(spec: &GameSpec, horizon: usize, warnings: &mut Vec<String>) -> Result<UcbParams> {
    match UcbParams::theoretical(spec, horizon) {
        Ok(p) => Ok(p),
        Err(e) => {
            warnings.push(format!("default confidence level unusable ({e}); using delta = 0.5"));
            let mut p = UcbParams::new(horizon, 0.5, 1.0, spec.cap())?;
            p.beta = 1.0 / ((horizon as f64).sqrt() * p.diameter());
            Ok(p)
        }
    }
}

/// Runs every seed and returns the summary with the traces in seed order.
pub fn simulate_runs(cfg: &ScenarioConfig) -> Result<(SimulationSummary, Vec<RegretTrace>)> {
    let spec = cfg.spec()?;
    let horizon = cfg.horizon()?;
    let seeds = cfg.seeds()?;
    let kind = cfg.noise();
    let opponent = cfg.opponent.unwrap_or_default();
    let mut warnings = Vec::new();
    let params = ucb_params(&spec, horizon, &mut warnings)?;
    let noises = seeds.iter().map(|&s| NoiseModel::new(kind, s)).collect::<fairshare::Result<Vec<_>>>()?;
    let reference = MaximinReference::compute(&spec)?;

    let traces = pool(cfg.jobs())?.install(|| {
        noises
            .par_iter()
            .map(|noise| simulate_trace(&spec, &params, noise, &reference, opponent.into()))
            .collect::<fairshare::Result<Vec<_>>>()
    })?;

    for t in &traces {
        for w in &t.metadata.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    let bound = match theoretical_regret_bound(&spec, horizon) {
        Ok(b) => Some(b),
        Err(e) => {
            warnings.push(format!("regret bound unavailable: {e}"));
            None
        }
    };
    let final_regret: Vec<f64> = traces.iter().map(RegretTrace::cum_regret).collect();
    let mean_regret = final_regret.iter().sum::<f64>() / final_regret.len() as f64;
    let max_regret = final_regret.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = horizon as f64 * reference.tolerance;
    let summary = SimulationSummary {
        means: spec.means().to_vec(),
        players: spec.m(),
        picks: spec.r(),
        cap: spec.cap(),
        horizon,
        seeds,
        noise: NoiseSpec(kind),
        opponent,
        delta: params.delta,
        beta: params.beta,
        reference,
        final_regret,
        mean_regret,
        max_regret,
        bound,
        bound_satisfied: bound.map(|b| max_regret + slack <= b),
        warnings,
    };
    Ok((summary, traces))
}

pub fn write_simulation(dir: &Path, summary: &SimulationSummary, traces: &[RegretTrace]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (seed, trace) in summary.seeds.iter().zip(traces) {
        trace.save(dir, &format!("trace_seed{seed}"))?;
    }
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

pub fn simulate(cfg: &ScenarioConfig, stdout: &mut dyn Write) -> Result<SimulationSummary> {
    let (summary, traces) = simulate_runs(cfg)?;
    if let Some(dir) = &cfg.out {
        write_simulation(dir, &summary, &traces)?;
    }
    stdout.write_all((serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    if summary.bound_satisfied == Some(false) {
        return Err(CliError::Certificate(format!(
            "max regret {} exceeds the bound {}",
            summary.max_regret,
            summary.bound.unwrap_or(f64::NAN)
        )));
    }
    Ok(summary)
}
