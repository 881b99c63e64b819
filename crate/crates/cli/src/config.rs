//! Scenario description shared by all subcommands: an optional JSON file
//! merged with command-line flags, flags taking precedence.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use fairshare::online::{NoiseKind, OpponentPolicy};
use fairshare::GameSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const DEFAULT_RESOLUTION: f64 = 1e-2;
pub const DEFAULT_HORIZON: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed form when one exists, projected subgradient otherwise.
    #[default]
    Auto,
    ClosedForm,
    Gradient,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Sweep,
    Simulate,
}

/// Inclusive range `start:stop:step` for the first mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got {s:?}"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}"));
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !step.is_finite() {
            return Err(format!("step must be positive, got {step}"));
        }
        if !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(format!("empty range {start}:{stop}"));
        }
        Ok(Self { start, stop, step })
    }
}

/// `none`, `gaussian[:sigma]` or `uniform:half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NoiseSpec(pub NoiseKind);

impl FromStr for NoiseSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let arg = |default: Option<f64>| -> std::result::Result<f64, String> {
            match arg {
                Some(a) => a.parse::<f64>().map_err(|e| format!("bad noise parameter {a:?}: {e}")),
                None => default.ok_or_else(|| format!("noise {name:?} needs a parameter")),
            }
        };
        let kind = match name {
            "none" => NoiseKind::None,
            "gaussian" => NoiseKind::Gaussian { sigma: arg(Some(1.0))? },
            "uniform" => NoiseKind::Uniform { half_width: arg(None)? },
            other => return Err(format!("unknown noise {other:?}")),
        };
        Ok(Self(kind))
    }
}

impl TryFrom<String> for NoiseSpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<NoiseSpec> for String {
    fn from(n: NoiseSpec) -> String {
        match n.0 {
            NoiseKind::None => "none".into(),
            NoiseKind::Gaussian { sigma } => format!("gaussian:{sigma}"),
            NoiseKind::Uniform { half_width } => format!("uniform:{half_width}"),
            NoiseKind::CorrelatedGaussian { sigma, rho } => format!("correlated:{sigma}:{rho}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Opponent {
    #[default]
    None,
    WorstCase,
    UniformRandom,
}

impl From<Opponent> for OpponentPolicy {
    fn from(o: Opponent) -> Self {
        match o {
            Opponent::None => OpponentPolicy::None,
            Opponent::WorstCase => OpponentPolicy::WorstCase,
            Opponent::UniformRandom => OpponentPolicy::UniformRandom,
        }
    }
}

/// Everything a scenario can set. Every field is optional so that a file and
/// the flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Option<Mode>,
    pub means: Option<Vec<f64>>,
    pub resources: Option<usize>,
    pub players: Option<usize>,
    pub picks: Option<usize>,
    pub cap: Option<f64>,
    pub method: Option<Method>,
    pub epsilon: Option<f64>,
    pub resolution: Option<f64>,
    pub e1: Option<SweepRange>,
    pub horizon: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub noise: Option<NoiseSpec>,
    pub opponent: Option<Opponent>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig {
            mode: other.mode.or(self.mode),
            means: other.means.or(self.means),
            resources: other.resources.or(self.resources),
            players: other.players.or(self.players),
            picks: other.picks.or(self.picks),
            cap: other.cap.or(self.cap),
            method: other.method.or(self.method),
            epsilon: other.epsilon.or(self.epsilon),
            resolution: other.resolution.or(self.resolution),
            e1: other.e1.or(self.e1),
            horizon: other.horizon.or(self.horizon),
            seeds: other.seeds.or(self.seeds),
            noise: other.noise.or(self.noise),
            opponent: other.opponent.or(self.opponent),
            out: other.out.or(self.out),
            jobs: other.jobs.or(self.jobs),
        }
    }

    /// The base game. Means default to all ones when only `resources` is set.
    pub fn spec(&self) -> Result<GameSpec> {
        let means = match (&self.means, self.resources) {
            (Some(m), Some(n)) if m.len() != n => {
                return Err(CliError::Usage(format!("{} means given for {n} resources", m.len())))
            }
            (Some(m), _) => m.clone(),
            (None, Some(n)) => vec![1.0; n],
            (None, None) => return Err(CliError::Usage("either --means or --resources is required".into())),
        };
        GameSpec::new(means, self.players.unwrap_or(2), self.picks.unwrap_or(1), self.cap)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn method(&self) -> Method {
        self.method.unwrap_or_default()
    }

    pub fn epsilon(&self) -> Result<f64> {
        positive("epsilon", self.epsilon.unwrap_or(DEFAULT_EPSILON))
    }

    pub fn resolution(&self) -> Result<f64> {
        positive("resolution", self.resolution.unwrap_or(DEFAULT_RESOLUTION))
    }

    pub fn horizon(&self) -> Result<usize> {
        match self.horizon.unwrap_or(DEFAULT_HORIZON) {
            0 => Err(CliError::Usage("horizon must be at least 1".into())),
            t => Ok(t),
        }
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        match &self.seeds {
            Some(s) if s.is_empty() => Err(CliError::Usage("at least one seed is required".into())),
            Some(s) => Ok(s.clone()),
            None => Ok(vec![0]),
        }
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise.map_or(NoiseKind::Gaussian { sigma: 1.0 }, |n| n.0)
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(0)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

/// A list of numbers separated by commas or whitespace, given inline or as a
/// path to a file containing such a list.
pub fn parse_means(arg: &str) -> std::result::Result<Vec<f64>, String> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| format!("cannot read {arg}: {e}"))?
    } else {
        arg.to_string()
    };
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad mean {s:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(format!("no means in {arg:?}"));
    }
    Ok(values)
}

/// Parsed `--means` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanList(pub Vec<f64>);

impl FromStr for MeanList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_means(s).map(MeanList)
    }
}

/// Flags common to every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// JSON scenario file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Mean rewards, comma-separated or a file.
    #[arg(long)]
    pub means: Option<MeanList>,

    /// Number of resources when --means is omitted (all means 1).
    #[arg(long)]
    pub resources: Option<usize>,

    /// Number of players m.
    #[arg(long)]
    pub players: Option<usize>,

    /// Resources picked per player r.
    #[arg(long)]
    pub picks: Option<usize>,

    /// Upper bound on rewards; defaults to the largest mean.
    #[arg(long)]
    pub cap: Option<f64>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,

    /// Accuracy of the gradient method (step eps, ceil(1/eps^2) iterations).
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Grid spacing for the grid method.
    #[arg(long)]
    pub resolution: Option<f64>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl ScenarioArgs {
    pub fn to_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            means: self.means.clone().map(|m| m.0),
            resources: self.resources,
            players: self.players,
            picks: self.picks,
            cap: self.cap,
            method: self.method,
            epsilon: self.epsilon,
            resolution: self.resolution,
            out: self.out.clone(),
            jobs: self.jobs,
            ..ScenarioConfig::default()
        }
    }

    /// File contents (if any) overlaid with the flags.
    pub fn resolve(&self, extra: ScenarioConfig) -> Result<ScenarioConfig> {
        let base = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        Ok(base.overlay(self.to_config().overlay(extra)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_ranges() {
        let r: SweepRange = "0.5:1.5:0.25".parse().unwrap();
        assert_eq!(r.values(), vec![0.5, 0.75, 1.0, 1.25, 1.5]);
        let r: SweepRange = "0.1:0.3:0.1".parse().unwrap();
        assert_eq!(r.values().len(), 3);
        assert!("1:2:0".parse::<SweepRange>().is_err());
        assert!("2:1:0.1".parse::<SweepRange>().is_err());
        assert!("1:2".parse::<SweepRange>().is_err());
    }

    #[test]
    fn noise_specs() {
        assert_eq!("none".parse::<NoiseSpec>().unwrap().0, NoiseKind::None);
        assert_eq!("gaussian".parse::<NoiseSpec>().unwrap().0, NoiseKind::Gaussian { sigma: 1.0 });
        assert_eq!("gaussian:0.5".parse::<NoiseSpec>().unwrap().0, NoiseKind::Gaussian { sigma: 0.5 });
        assert!("uniform".parse::<NoiseSpec>().is_err());
        assert!("laplace:1".parse::<NoiseSpec>().is_err());
    }

    #[test]
    fn means_lists() {
        assert_eq!(parse_means("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert!(parse_means("1,x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: ScenarioConfig = serde_json::from_str(r#"{"means": [1, 2], "players": 3, "horizon": 50}"#).unwrap();
        let flags = ScenarioConfig { players: Some(2), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.players, Some(2));
        assert_eq!(merged.horizon, Some(50));
        assert_eq!(merged.means, Some(vec![1.0, 2.0]));
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn spec_defaults() {
        let cfg = ScenarioConfig { resources: Some(4), ..Default::default() };
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.means(), &[1.0; 4]);
        assert_eq!((spec.m(), spec.r()), (2, 1));
        assert!(ScenarioConfig::default().spec().is_err());
    }
}
