use std::path::Path;

use anyhow::{bail, Context};
use elecmarket::output::{write_atomic, write_simulation, CsvRow};
use elecmarket::scenario::Scenario;
use elecmarket::sim::{prepare_steps, RunOverrides, SimState, Simulation, SimulationResult};
use elecmarket::stochastic::stream_rng;
use elecmarket::temporal::TimeStep;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::RunContext;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Monte-Carlo repetitions, each with its own seed derived from the run seed.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Continue from the per-year checkpoint in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    seed: u64,
    config_sha256: Option<String>,
    overrides: Vec<String>,
    state: SimState,
}

/// One run's yearly headline numbers, for comparing Monte-Carlo repetitions.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunYear {
    pub run: usize,
    pub seed: u64,
    pub year: i32,
    pub average_price: f64,
    pub relative_carbon_intensity: f64,
}

impl CsvRow for RunYear {
    const HEADER: &'static [&'static str] = &["run", "seed", "year", "average_price", "relative_carbon_intensity"];
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpreadRow {
    pub year: i32,
    pub runs: usize,
    pub mean_price: f64,
    pub std_price: f64,
    pub mean_relative_carbon_intensity: f64,
    pub std_relative_carbon_intensity: f64,
}

impl CsvRow for SpreadRow {
    const HEADER: &'static [&'static str] = &[
        "year",
        "runs",
        "mean_price",
        "std_price",
        "mean_relative_carbon_intensity",
        "std_relative_carbon_intensity",
    ];
}

struct RunSpec<'a> {
    scenario: &'a Scenario,
    steps: &'a [TimeStep],
    seed: u64,
    resume: bool,
    config_sha256: Option<&'a str>,
    overrides: &'a [String],
}

fn run_one(dir: &Path, spec: &RunSpec) -> anyhow::Result<SimulationResult> {
    let ckpt_path = dir.join("checkpoint.json");
    let mut sim = if spec.resume && ckpt_path.exists() {
        let text = std::fs::read_to_string(&ckpt_path).with_context(|| format!("reading {}", ckpt_path.display()))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", ckpt_path.display()))?;
        if ckpt.seed != spec.seed
            || ckpt.config_sha256.as_deref() != spec.config_sha256
            || ckpt.overrides != spec.overrides
        {
            bail!(
                "{} was written with a different seed, config or overrides",
                ckpt_path.display()
            );
        }
        log::info!("resuming at year offset {}", ckpt.state.year_index);
        Simulation::resume(
            spec.scenario,
            spec.steps,
            spec.seed,
            RunOverrides::default(),
            ckpt.state,
        )?
    } else {
        Simulation::new(spec.scenario, spec.steps, spec.seed, RunOverrides::default())?
    };
    while !sim.is_finished() {
        sim.step_year()?;
        let ckpt = Checkpoint {
            seed: spec.seed,
            config_sha256: spec.config_sha256.map(str::to_string),
            overrides: spec.overrides.to_vec(),
            state: sim.state().clone(),
        };
        let text = serde_json::to_string(&ckpt)?;
        write_atomic(&ckpt_path, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| elecmarket::Error::io(&ckpt_path, e))
        })?;
    }
    Ok(sim.finish())
}

fn headline(run: usize, seed: u64, result: &SimulationResult) -> anyhow::Result<Vec<RunYear>> {
    result
        .ledgers
        .iter()
        .map(|l| {
            Ok(RunYear {
                run,
                seed,
                year: l.year,
                average_price: l.average_price,
                relative_carbon_intensity: result.relative_carbon_intensity(l)?,
            })
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Across-run mean and sample standard deviation per year.
pub fn spread(rows: &[RunYear]) -> Vec<SpreadRow> {
    let mut years: Vec<i32> = rows.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();
    years
        .into_iter()
        .map(|year| {
            let of_year: Vec<&RunYear> = rows.iter().filter(|r| r.year == year).collect();
            let prices: Vec<f64> = of_year.iter().map(|r| r.average_price).collect();
            let rci: Vec<f64> = of_year.iter().map(|r| r.relative_carbon_intensity).collect();
            let (mean_price, std_price) = mean_std(&prices);
            let (mean_rci, std_rci) = mean_std(&rci);
            SpreadRow {
                year,
                runs: of_year.len(),
                mean_price,
                std_price,
                mean_relative_carbon_intensity: mean_rci,
                std_relative_carbon_intensity: std_rci,
            }
        })
        .collect()
}

pub fn run(ctx: &mut RunContext, args: &Args) -> anyhow::Result<()> {
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let scenario = ctx.load_scenario()?;
    let seed = ctx.seed(Some(&scenario));
    let steps = prepare_steps(&scenario)?;
    let durations: Vec<f64> = steps.iter().map(|s| s.duration_h).collect();
    let spec = |seed| RunSpec {
        scenario: &scenario,
        steps: &steps,
        seed,
        resume: args.resume,
        config_sha256: ctx.config_sha256.as_deref(),
        overrides: &ctx.overrides,
    };

    if args.runs == 1 {
        let result = run_one(&ctx.out, &spec(seed))?;
        for p in write_simulation(&ctx.out, &result, &durations)? {
            ctx.record(p);
        }
        let summary = headline(0, seed, &result)?;
        log::info!(
            "simulated {} years; final average price {:.2}",
            result.ledgers.len(),
            summary.last().map_or(f64::NAN, |r| r.average_price)
        );
        return Ok(());
    }

    let seeds: Vec<u64> = (0..args.runs).map(|i| stream_rng(seed, i as u64).random()).collect();
    let results: Vec<(std::path::PathBuf, SimulationResult)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let dir = ctx.out.join(format!("run-{i:03}"));
            let result = run_one(&dir, &spec(*s)).with_context(|| format!("run {i}"))?;
            Ok((dir, result))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut rows = Vec::new();
    for (i, ((dir, result), s)) in results.iter().zip(&seeds).enumerate() {
        for p in write_simulation(dir, result, &durations)? {
            ctx.record(p);
        }
        rows.extend(headline(i, *s, result)?);
    }
    ctx.write_csv("monte_carlo_runs.csv", &rows)?;
    ctx.write_csv("monte_carlo_spread.csv", &spread(&rows))?;
    Ok(())
}
