use std::collections::BTreeSet;

use anyhow::{bail, Context};
use elecmarket::bidding::{run_market_power_experiment, MarketPowerConfig, QLearningConfig, RewardKind};
use elecmarket::output::{write_market_power, CsvRow};
use elecmarket::sim::prepare_steps;
use elecmarket::stochastic::stream_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::RunContext;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// GenCo whose plants share the learned policy; repeat to form a colluding group.
    #[arg(long = "learner", required = true)]
    pub learners: Vec<String>,
    /// Bid cap in £/MWh.
    #[arg(long)]
    pub cap: f64,
    /// Each episode is one year of clearing periods.
    #[arg(long, default_value_t = 400)]
    pub episodes: usize,
    #[arg(long, value_enum, default_value = "clearing-price")]
    pub reward: Reward,
    #[arg(long, default_value_t = 25)]
    pub price_levels: usize,
    /// Independent experiments with seeds derived from the run seed.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Reward {
    /// The period's clearing price.
    ClearingPrice,
    /// The learner group's margin per MW.
    Profit,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub repeat: usize,
    pub seed: u64,
    pub cap: f64,
    pub learner_capacity_share: f64,
    pub final_price: f64,
    pub baseline_price: f64,
    pub price_ratio: f64,
    pub extreme_bid_share: f64,
}

impl CsvRow for SummaryRow {
    const HEADER: &'static [&'static str] = &[
        "repeat",
        "seed",
        "cap",
        "learner_capacity_share",
        "final_price",
        "baseline_price",
        "price_ratio",
        "extreme_bid_share",
    ];
}

pub fn run(ctx: &mut RunContext, args: &Args) -> anyhow::Result<()> {
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let scenario = ctx.load_scenario()?;
    let seed = ctx.seed(Some(&scenario));
    let steps = prepare_steps(&scenario)?;
    let q = QLearningConfig {
        price_levels: args.price_levels,
        reward: match args.reward {
            Reward::ClearingPrice => RewardKind::ClearingPrice,
            Reward::Profit => RewardKind::Profit,
        },
        ..QLearningConfig::default()
    };
    let learners: BTreeSet<String> = args.learners.iter().cloned().collect();
    let seeds: Vec<u64> = if args.repeats == 1 {
        vec![seed]
    } else {
        (0..args.repeats).map(|i| stream_rng(seed, i as u64).random()).collect()
    };
    let reports = seeds
        .par_iter()
        .map(|&s| {
            let cfg = MarketPowerConfig {
                learners: learners.clone(),
                cap: args.cap,
                episodes: args.episodes,
                seed: s,
                q: q.clone(),
            };
            run_market_power_experiment(&scenario, &steps, &cfg).with_context(|| format!("experiment with seed {s}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut summary = Vec::with_capacity(reports.len());
    for (i, (report, &s)) in reports.iter().zip(&seeds).enumerate() {
        let dir = if args.repeats == 1 {
            ctx.out.clone()
        } else {
            ctx.out.join(format!("repeat-{i:03}"))
        };
        for p in write_market_power(&dir, report)? {
            ctx.record(p);
        }
        summary.push(SummaryRow {
            repeat: i,
            seed: s,
            cap: report.cap,
            learner_capacity_share: report.learner_capacity_share,
            final_price: report.final_price,
            baseline_price: report.baseline_price,
            price_ratio: report.price_ratio(),
            extreme_bid_share: report.extreme_bid_share(),
        });
        log::info!(
            "repeat {i}: final price {:.2} against baseline {:.2}",
            report.final_price,
            report.baseline_price
        );
    }
    ctx.write_csv("market_power_summary.csv", &summary)
}
