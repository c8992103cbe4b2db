use anyhow::bail;
use elecmarket::optimize::genome::{CarbonEncoding, CarbonPolicyGenome};
use elecmarket::optimize::objectives::objective_carbon;
use elecmarket::optimize::{evolve_nsga2, hypervolume_trace, Archive, Nsga2Config};
use elecmarket::output::{write_atomic, CsvRow};
use elecmarket::sim::{prepare_steps, RunOverrides, Simulation};
use serde::{Deserialize, Serialize};

use crate::context::RunContext;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum, default_value = "per-year")]
    pub encoding: Encoding,
    /// Genes of a per-year genome; the scenario horizon when omitted.
    #[arg(long)]
    pub years: Option<usize>,
    #[arg(long, default_value_t = 24)]
    pub pop: usize,
    #[arg(long, default_value_t = 20)]
    pub generations: usize,
    /// Continue from archive.csv in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Encoding {
    PerYear,
    Linear,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HypervolumeRow {
    pub generation: usize,
    pub hypervolume: f64,
}

impl CsvRow for HypervolumeRow {
    const HEADER: &'static [&'static str] = &["generation", "hypervolume"];
}

pub fn run(ctx: &mut RunContext, args: &Args) -> anyhow::Result<()> {
    let scenario = ctx.load_scenario()?;
    let seed = ctx.seed(Some(&scenario));
    let steps = prepare_steps(&scenario)?;
    let horizon = scenario.config.horizon_yr as usize;
    let encoding = match args.encoding {
        Encoding::PerYear => CarbonEncoding::PerYear,
        Encoding::Linear => CarbonEncoding::Linear,
    };
    let years = args.years.unwrap_or(horizon);
    if years == 0 {
        bail!("--years must be at least 1");
    }
    let bounds = CarbonPolicyGenome::bounds(encoding, years);
    let evaluate = |genes: &[f64]| -> elecmarket::Result<Vec<f64>> {
        let policy = CarbonPolicyGenome::decode(encoding, genes)?;
        let overrides = RunOverrides {
            carbon: Some(policy.schedule(horizon)),
            ..Default::default()
        };
        let result = Simulation::new(&scenario, &steps, seed, overrides)?.run()?;
        let (price, rci) = objective_carbon(&result)?;
        Ok(vec![price, rci])
    };
    let archive_path = ctx.path("archive.csv");
    let mut archive = if args.resume {
        Archive::resume(&archive_path)?
    } else {
        Archive::create(&archive_path)?
    };
    let cfg = Nsga2Config {
        pop_size: args.pop,
        generations: args.generations,
        n_objectives: 2,
        seed,
        ..Nsga2Config::default()
    };
    let outcome = evolve_nsga2(evaluate, &bounds, &cfg, &mut archive)?;
    ctx.record(archive_path);

    let front = outcome.pareto_front();
    let pareto_path = ctx.path("pareto.csv");
    write_atomic(&pareto_path, |w| {
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        let mut header: Vec<String> = (0..bounds.len()).map(|j| format!("g{j}")).collect();
        header.extend(["average_price".into(), "relative_carbon_intensity".into()]);
        csv.write_record(&header)?;
        for ind in &front {
            let row: Vec<String> = ind.genome.iter().chain(&ind.objectives).map(f64::to_string).collect();
            csv.write_record(&row)?;
        }
        csv.flush().map_err(|e| elecmarket::Error::io("pareto.csv", e))
    })?;
    ctx.record(pareto_path);

    let hv: Vec<HypervolumeRow> = hypervolume_trace(&archive.records)?
        .into_iter()
        .enumerate()
        .map(|(generation, hypervolume)| HypervolumeRow {
            generation,
            hypervolume,
        })
        .collect();
    log::info!(
        "{} policies on the final front; hypervolume {:.4}",
        front.len(),
        hv.last().map_or(0.0, |h| h.hypervolume)
    );
    ctx.write_csv("hypervolume.csv", &hv)
}
