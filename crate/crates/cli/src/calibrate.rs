use std::path::PathBuf;

use anyhow::{bail, Context};
use elecmarket::optimize::genome::CalibrationGenome;
use elecmarket::optimize::objectives::{objective_mix_error, target_from_rows, MixErrorMode, MixShareRow};
use elecmarket::optimize::{evolve_ga, Archive, GaConfig};
use elecmarket::output::{read_csv, CsvRow};
use elecmarket::sim::{prepare_steps, RunOverrides, Simulation};
use serde::{Deserialize, Serialize};

use crate::context::RunContext;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Target shares: year,wind,nuclear,solar,ccgt,coal in percent.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "final-year")]
    pub mix_error: MixError,
    #[arg(long, default_value_t = 30)]
    pub pop: usize,
    #[arg(long, default_value_t = 40)]
    pub generations: usize,
    /// Continue from archive.csv in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Mode {
    /// One (m, c) curve for every year.
    Single,
    /// A curve per year, per-GenCo uncertainty and a nuclear subsidy.
    LongTerm,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MixError {
    FinalYear,
    Summed,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HistoryRow {
    pub generation: usize,
    pub best_error: f64,
}

impl CsvRow for HistoryRow {
    const HEADER: &'static [&'static str] = &["generation", "best_error"];
}

#[derive(Debug, Serialize)]
struct Best {
    genome: Vec<f64>,
    decoded: CalibrationGenome,
    mix_error: f64,
}

pub fn run(ctx: &mut RunContext, args: &Args) -> anyhow::Result<()> {
    let scenario = ctx.load_scenario()?;
    let seed = ctx.seed(Some(&scenario));
    let steps = prepare_steps(&scenario)?;
    let rows: Vec<MixShareRow> =
        read_csv(&args.target).with_context(|| format!("reading {}", args.target.display()))?;
    if rows.is_empty() {
        bail!("{} has no target years", args.target.display());
    }
    let target = target_from_rows(&rows);
    let mode = match args.mix_error {
        MixError::FinalYear => MixErrorMode::FinalYear,
        MixError::Summed => MixErrorMode::Summed,
    };
    let years = scenario.config.horizon_yr as usize;
    type Decode = fn(&[f64]) -> elecmarket::Result<CalibrationGenome>;
    let (bounds, decode): (_, Decode) = match args.mode {
        Mode::Single => (CalibrationGenome::single_bounds(), CalibrationGenome::decode_single),
        Mode::LongTerm => (
            CalibrationGenome::long_term_bounds(years),
            CalibrationGenome::decode_long_term,
        ),
    };
    let evaluate = |genes: &[f64]| -> elecmarket::Result<f64> {
        let genome = decode(genes)?;
        let overrides = RunOverrides {
            price_curve: Some(genome.price_curve()),
            nuclear_subsidy: genome.nuclear_subsidy(),
            ..Default::default()
        };
        let result = Simulation::new(&scenario, &steps, seed, overrides)?.run()?;
        objective_mix_error(&result.ledgers, &target, mode)
    };
    let archive_path = ctx.path("archive.csv");
    let mut archive = if args.resume {
        Archive::resume(&archive_path)?
    } else {
        Archive::create(&archive_path)?
    };
    let cfg = GaConfig {
        pop_size: args.pop,
        generations: args.generations,
        seed,
        ..GaConfig::default()
    };
    let outcome = evolve_ga(evaluate, &bounds, &cfg, &mut archive)?;
    ctx.record(archive_path);
    let history: Vec<HistoryRow> = outcome
        .history
        .iter()
        .enumerate()
        .map(|(generation, &best_error)| HistoryRow { generation, best_error })
        .collect();
    ctx.write_csv("history.csv", &history)?;
    let best = Best {
        decoded: decode(&outcome.best.genome)?,
        genome: outcome.best.genome.clone(),
        mix_error: outcome.best.objectives[0],
    };
    log::info!("best mix error {:.4} pp", best.mix_error);
    ctx.write_json("best.json", &best)
}
