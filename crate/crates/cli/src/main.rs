//! `elecmarket`: run simulations, clustering, calibration, carbon-policy search and
//! market-power experiments from the command line.

mod calibrate;
mod carbon;
mod cluster;
mod context;
mod market_power;
mod metrics;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use context::RunContext;

#[derive(Debug, Parser)]
#[command(
    name = "elecmarket",
    version,
    about = "Agent-based wholesale electricity market simulator"
)]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run seed. Falls back to the scenario's seed, then to a random one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "ELECMARKET_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Scenario override as a dotted KEY=VALUE, e.g. `demand_growth_per_yr=0.01`.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the market simulation over the scenario horizon.
    Simulate(simulate::Args),
    /// Pick representative days and score them against the full series.
    ClusterDays(cluster::Args),
    /// Fit the predicted price curve to a target generation mix with a GA.
    Calibrate(calibrate::Args),
    /// Search carbon-tax policies for price and carbon intensity with NSGA-II.
    OptimizeCarbon(carbon::Args),
    /// Train a Q-learning bidder and compare prices against SRMC bidding.
    MarketPower(market_power::Args),
    /// Score a forecast with MAPE, RMSE and MASE.
    Metrics(metrics::Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::ClusterDays(_) => "cluster-days",
            Command::Calibrate(_) => "calibrate",
            Command::OptimizeCarbon(_) => "optimize-carbon",
            Command::MarketPower(_) => "market-power",
            Command::Metrics(_) => "metrics",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut ctx = RunContext::new(&cli, cli.command.name())?;
    match &cli.command {
        Command::Simulate(a) => simulate::run(&mut ctx, a)?,
        Command::ClusterDays(a) => cluster::run(&mut ctx, a)?,
        Command::Calibrate(a) => calibrate::run(&mut ctx, a)?,
        Command::OptimizeCarbon(a) => carbon::run(&mut ctx, a)?,
        Command::MarketPower(a) => market_power::run(&mut ctx, a)?,
        Command::Metrics(a) => metrics::run(&mut ctx, a)?,
    }
    ctx.write_manifest()
}

/// The error chain joined by `: `, skipping causes already quoted by the message above them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if last.contains(msg.trim()) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(msg.trim());
        last = msg;
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
