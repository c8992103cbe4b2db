use std::collections::BTreeSet;
use std::path::Path;

use elecmarket::bidding::{run_market_power_experiment, MarketPowerConfig, QLearningConfig, RewardKind};
use elecmarket::scenario::Scenario;
use elecmarket::sim::prepare_steps;
use rayon::prelude::*;

fn fixture() -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/market_power.toml");
    Scenario::load(path, &[]).unwrap()
}

fn config(learner: &str, cap: f64, seed: u64) -> MarketPowerConfig {
    MarketPowerConfig {
        learners: BTreeSet::from([learner.to_string()]),
        cap,
        episodes: 400,
        seed,
        q: QLearningConfig::default(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn fleet_shares() {
    let s = fixture();
    let steps = prepare_steps(&s).unwrap();
    assert_eq!(steps.len(), 8 * 24);
    let total: f64 = steps.iter().map(|s| s.duration_h).sum();
    assert!((total - 8760.0).abs() < 1e-9);
    let r = run_market_power_experiment(&s, &steps, &config("big", 600.0, 0)).unwrap();
    assert!((r.learner_capacity_share - 0.6).abs() < 1e-12);
    let r = run_market_power_experiment(&s, &steps, &config("tiny", 150.0, 0)).unwrap();
    assert!((r.learner_capacity_share - 0.05).abs() < 1e-12);
}

#[test]
fn small_learner_under_low_cap_stays_near_baseline() {
    let s = fixture();
    let steps = prepare_steps(&s).unwrap();
    let ratios: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            run_market_power_experiment(&s, &steps, &config("tiny", 150.0, seed))
                .unwrap()
                .price_ratio()
        })
        .collect();
    assert!(ratios.iter().all(|r| (r - 1.0).abs() <= 0.1), "{ratios:?}");
}

#[test]
fn large_learner_under_high_cap_raises_prices() {
    let s = fixture();
    let steps = prepare_steps(&s).unwrap();
    let ratios: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            run_market_power_experiment(&s, &steps, &config("big", 600.0, seed))
                .unwrap()
                .price_ratio()
        })
        .collect();
    assert!(median(ratios) >= 1.2);
}

#[test]
fn no_bid_exceeds_the_cap() {
    let s = fixture();
    let steps = prepare_steps(&s).unwrap();
    let r = run_market_power_experiment(&s, &steps, &config("big", 90.0, 4)).unwrap();
    assert!(r.histogram.iter().all(|b| b.price_bin <= 90.0));
    assert_eq!(r.histogram.last().unwrap().price_bin, 90.0);
}

#[test]
fn empty_learner_set_and_zero_episodes_are_rejected() {
    let s = fixture();
    let steps = prepare_steps(&s).unwrap();
    let mut c = config("big", 600.0, 0);
    c.learners.clear();
    assert!(run_market_power_experiment(&s, &steps, &c).is_err());
    let c = MarketPowerConfig {
        episodes: 0,
        ..config("big", 600.0, 0)
    };
    assert!(run_market_power_experiment(&s, &steps, &c).is_err());
}

#[test]
fn two_regime_bids_concentrate_at_the_extremes() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/two_regime.toml");
    let s = Scenario::load(path, &[]).unwrap();
    let steps = prepare_steps(&s).unwrap();
    let shares: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let mut c = config("base", 600.0, seed);
            c.episodes = 4000;
            c.q.reward = RewardKind::Profit;
            run_market_power_experiment(&s, &steps, &c).unwrap().extreme_bid_share()
        })
        .collect();
    assert!(median(shares) >= 0.6);
}
