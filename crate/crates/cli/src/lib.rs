//! Command-line front end for the `fairshare` solvers.
//!
//! ```text
//! fairshare solve    --means 3,1,1,1 --players 2 --picks 1
//! fairshare sweep    --resources 4 --players 3 --e1 0.1:5:0.1 --out runs/
//! fairshare simulate --means 1,0.5 --horizon 1000 --seeds 10 --out runs/
//! ```

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;

use clap::{Args, Parser, Subcommand};

use crate::config::{Mode, NoiseSpec, Opponent, ScenarioArgs, ScenarioConfig, SweepRange};
pub use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "fairshare", version, about = "Worst-case-optimal play in fair-reward sharing games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and print the strategy as JSON.
    Solve(SolveArgs),
    /// Solve a family of instances that differ only in the first mean.
    Sweep(SweepArgs),
    /// Run the online learner and report worst-case regret.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Values of the first mean as start:stop:step.
    #[arg(long)]
    pub e1: Option<SweepRange>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Number of slots T.
    #[arg(long)]
    pub horizon: Option<usize>,

    /// Number of seeds; runs seeds 0..k.
    #[arg(long)]
    pub seeds: Option<u64>,

    /// Reward noise: none, gaussian[:sigma] or uniform:half_width.
    #[arg(long)]
    pub noise: Option<NoiseSpec>,

    /// Opponent model for the realised-payoff column.
    #[arg(long, value_enum)]
    pub opponent: Option<Opponent>,
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Solve(args) => {
            let cfg = args.scenario.resolve(ScenarioConfig { mode: Some(Mode::Solve), ..Default::default() })?;
            commands::solve(&cfg, stdout)?;
        }
        Command::Sweep(args) => {
            let cfg = args.scenario.resolve(ScenarioConfig { mode: Some(Mode::Sweep), e1: args.e1, ..Default::default() })?;
            commands::sweep(&cfg, stdout)?;
        }
        Command::Simulate(args) => {
            let extra = ScenarioConfig {
                mode: Some(Mode::Simulate),
                horizon: args.horizon,
                seeds: args.seeds.map(|k| (0..k).collect()),
                noise: args.noise,
                opponent: args.opponent,
                ..Default::default()
            };
            let cfg = args.scenario.resolve(extra)?;
            commands::simulate(&cfg, stdout)?;
        }
    }
    Ok(())
}
