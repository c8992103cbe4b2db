//! Tabular Q-learning bidder and the market-power experiment.
//!
//! A group of learner GenCos shares one policy that picks a bid price from a grid running from
//! zero to the market cap; everyone else bids short-run marginal cost. Each episode replays one
//! year of clearing periods.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{srmc, PowerPlant};
use crate::error::{Error, Result};
use crate::market::{available_quantity, clear_step, Bid};
use crate::scenario::Scenario;
use crate::sim::keyed_rng;
use crate::stochastic::{perturb_demand, ResidualDistribution, SimRng};
use crate::temporal::{TimeStep, HOURS_PER_DAY};

/// Discretised market state seen by the learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MarketObservation {
    pub hour: u8,
    pub demand: u8,
    pub gas: u8,
    pub coal: u8,
    pub co2: u8,
    pub last_price: u8,
}

/// Bucket counts for each observation field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationBuckets {
    pub hour: u8,
    pub demand: u8,
    pub fuel: u8,
    pub last_price: u8,
}

impl Default for ObservationBuckets {
    fn default() -> Self {
        ObservationBuckets {
            hour: 8,
            demand: 5,
            fuel: 3,
            last_price: 3,
        }
    }
}

/// Index of the bucket holding `x` given ascending interior edges.
fn bucket(x: f64, edges: &[f64]) -> u8 {
    edges.iter().take_while(|e| x >= **e).count() as u8
}

/// Interior edges splitting `values` into `n` equally populated buckets.
fn quantile_edges(values: &[f64], n: u8) -> Vec<f64> {
    if values.is_empty() || n <= 1 {
        return Vec::new();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (1..n as usize)
        .map(|i| v[(i * v.len() / n as usize).min(v.len() - 1)])
        .collect()
}

/// Maps raw market data to observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    pub buckets: ObservationBuckets,
    pub demand_edges: Vec<f64>,
    pub gas_edges: Vec<f64>,
    pub coal_edges: Vec<f64>,
    pub co2_edges: Vec<f64>,
    pub price_edges: Vec<f64>,
}

impl Discretizer {
    /// Demand edges are quantiles of `demands`; fuel and carbon edges are quantiles of their
    /// yearly paths; last-price edges split `[0, cap]` evenly.
    pub fn new(
        buckets: ObservationBuckets,
        demands: &[f64],
        gas_path: &[f64],
        coal_path: &[f64],
        co2_path: &[f64],
        cap: f64,
    ) -> Self {
        let n = buckets.last_price.max(1);
        Discretizer {
            buckets,
            demand_edges: quantile_edges(demands, buckets.demand),
            gas_edges: quantile_edges(gas_path, buckets.fuel),
            coal_edges: quantile_edges(coal_path, buckets.fuel),
            co2_edges: quantile_edges(co2_path, buckets.fuel),
            price_edges: (1..n).map(|i| cap * i as f64 / n as f64).collect(),
        }
    }

    pub fn observe(
        &self,
        hour: usize,
        demand: f64,
        gas: f64,
        coal: f64,
        co2: f64,
        last_price: f64,
    ) -> MarketObservation {
        let hb = self.buckets.hour.max(1) as usize;
        MarketObservation {
            hour: ((hour % HOURS_PER_DAY) * hb / HOURS_PER_DAY) as u8,
            demand: bucket(demand, &self.demand_edges),
            gas: bucket(gas, &self.gas_edges),
            coal: bucket(coal, &self.coal_edges),
            co2: bucket(co2, &self.co2_edges),
            last_price: bucket(last_price, &self.price_edges),
        }
    }
}

/// Action values over a fixed price grid. Unvisited states read as all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub prices: Vec<f64>,
    values: HashMap<MarketObservation, Vec<f64>>,
}

impl QTable {
    /// `levels` evenly spaced prices from 0 to `cap` inclusive.
    pub fn new(cap: f64, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidArgument(format!(
                "price grid needs >= 2 levels, got {levels}"
            )));
        }
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "market cap must be positive, got {cap}"
            )));
        }
        let step = cap / (levels - 1) as f64;
        let mut prices: Vec<f64> = (0..levels).map(|i| i as f64 * step).collect();
        prices[levels - 1] = cap;
        Ok(QTable {
            prices,
            values: HashMap::new(),
        })
    }

    pub fn actions(&self) -> usize {
        self.prices.len()
    }

    pub fn get(&self, s: &MarketObservation, a: usize) -> f64 {
        self.values.get(s).map_or(0.0, |row| row[a])
    }

    pub fn set(&mut self, s: MarketObservation, a: usize, value: f64) {
        let n = self.actions();
        self.values.entry(s).or_insert_with(|| vec![0.0; n])[a] = value;
    }

    pub fn max_value(&self, s: &MarketObservation) -> f64 {
        self.values
            .get(s)
            .map_or(0.0, |row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Highest-valued action; ties go to the lowest price.
    pub fn greedy(&self, s: &MarketObservation) -> usize {
        let Some(row) = self.values.get(s) else {
            return 0;
        };
        let mut best = 0;
        for (a, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn visited_states(&self) -> usize {
        self.values.len()
    }
}

/// TD update `Q(s,a) += α (r + γ max Q(s') − Q(s,a))`. A terminal step (`next = None`) has no
/// continuation value. Returns the TD error δ.
pub fn q_update(
    q: &mut QTable,
    s: MarketObservation,
    a: usize,
    reward: f64,
    next: Option<&MarketObservation>,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let old = q.get(&s, a);
    let future = next.map_or(0.0, |n| q.max_value(n));
    let delta = reward + gamma * future - old;
    q.set(s, a, old + alpha * delta);
    delta
}

/// ε-greedy choice: uniform over the grid with probability ε, otherwise greedy.
pub fn select_action(q: &QTable, s: &MarketObservation, epsilon: f64, rng: &mut SimRng) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.actions())
    } else {
        q.greedy(s)
    }
}

/// What the learner is rewarded with after each clearing period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// The period's clearing price.
    #[default]
    ClearingPrice,
    /// Learner group margin over SRMC per MW of learner capacity.
    Profit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearningConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of episodes over which ε decays; it stays at `epsilon_end` afterwards.
    pub decay_fraction: f64,
    pub price_levels: usize,
    pub buckets: ObservationBuckets,
    pub reward: RewardKind,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        QLearningConfig {
            alpha: 0.1,
            gamma: 0.95,
            epsilon_start: 0.5,
            epsilon_end: 0.01,
            decay_fraction: 0.8,
            price_levels: 25,
            buckets: ObservationBuckets::default(),
            reward: RewardKind::ClearingPrice,
        }
    }
}

impl QLearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be in [0, 1], got {}",
                self.gamma
            )));
        }
        for (name, e) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1], got {e}")));
            }
        }
        if !(0.0..=1.0).contains(&self.decay_fraction) {
            return Err(Error::InvalidArgument(format!(
                "decay_fraction must be in [0, 1], got {}",
                self.decay_fraction
            )));
        }
        Ok(())
    }

    /// Exploration rate for 0-based `episode` out of `episodes`: exponential decay from
    /// `epsilon_start` to `epsilon_end`, then flat.
    pub fn epsilon(&self, episode: usize, episodes: usize) -> f64 {
        let decay = (self.decay_fraction * episodes as f64).ceil() - 1.0;
        if decay <= 0.0 || self.epsilon_start <= 0.0 {
            return self.epsilon_end;
        }
        let progress = (episode as f64 / decay).min(1.0);
        if self.epsilon_end <= 0.0 {
            return if progress >= 1.0 {
                0.0
            } else {
                self.epsilon_start * (1.0 - progress)
            };
        }
        self.epsilon_start * (self.epsilon_end / self.epsilon_start).powf(progress)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPowerConfig {
    pub learners: BTreeSet<String>,
    pub cap: f64,
    pub episodes: usize,
    pub seed: u64,
    pub q: QLearningConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub mean_reward: f64,
    pub avg_price: f64,
    pub baseline_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub price_bin: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPowerReport {
    pub cap: f64,
    pub learners: Vec<String>,
    pub learner_capacity_share: f64,
    pub episodes: Vec<EpisodeRecord>,
    /// Bids submitted by the learner group in the final episode.
    pub histogram: Vec<HistogramBin>,
    pub final_price: f64,
    pub baseline_price: f64,
    pub table: QTable,
}

impl MarketPowerReport {
    pub fn price_ratio(&self) -> f64 {
        self.final_price / self.baseline_price
    }

    /// Share of final-episode bids in the lowest or highest tenth of the price grid.
    pub fn extreme_bid_share(&self) -> f64 {
        let total: usize = self.histogram.iter().map(|b| b.count).sum();
        if total == 0 {
            return 0.0;
        }
        let n = self.histogram.len();
        let tenth = n.div_ceil(10);
        let extreme: usize = self
            .histogram
            .iter()
            .enumerate()
            .filter(|(i, _)| *i < tenth || *i >= n - tenth)
            .map(|(_, b)| b.count)
            .sum();
        extreme as f64 / total as f64
    }
}

struct Offer<'a> {
    plant: &'a PowerPlant,
    genco: &'a str,
    cost: f64,
    learner: bool,
}

fn demand_weighted(prices: &[f64], steps: &[TimeStep]) -> f64 {
    let (num, den) = prices.iter().zip(steps).fold((0.0, 0.0), |(n, d), (p, s)| {
        let w = s.demand_mw * s.duration_h;
        (n + p * w, d + w)
    });
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn fuel_path(scenario: &Scenario, name: &str) -> Vec<f64> {
    scenario
        .config
        .fuels
        .iter()
        .find(|f| f.name == name)
        .map(|f| (0..scenario.config.horizon_yr as usize).map(|t| f.price(t)).collect())
        .unwrap_or_default()
}

/// Train a shared bidding policy for `cfg.learners` over the scenario's first year and compare
/// the resulting prices with an all-SRMC control run on the same demand draws.
pub fn run_market_power_experiment(
    scenario: &Scenario,
    steps: &[TimeStep],
    cfg: &MarketPowerConfig,
) -> Result<MarketPowerReport> {
    if cfg.learners.is_empty() {
        return Err(Error::InvalidArgument(
            "market-power experiment needs at least one learner".into(),
        ));
    }
    if cfg.episodes == 0 {
        return Err(Error::InvalidArgument(
            "market-power experiment needs at least one episode".into(),
        ));
    }
    if steps.is_empty() {
        return Err(Error::InvalidArgument("no clearing periods".into()));
    }
    cfg.q.validate()?;
    for name in &cfg.learners {
        if !scenario.gencos.iter().any(|g| &g.name == name) {
            return Err(Error::InvalidArgument(format!(
                "learner `{name}` is not a GenCo in the scenario"
            )));
        }
    }
    let cap = cfg.cap;
    let lost_load_price = scenario.config.lost_load_price;
    if cap > lost_load_price {
        return Err(Error::InvalidArgument(format!(
            "market cap {cap} exceeds the lost-load price {lost_load_price}"
        )));
    }
    let mut q = QTable::new(cap, cfg.q.price_levels)?;

    let year = scenario.config.start_year;
    let carbon = scenario.carbon_schedule().price(0);
    let fuel_now = |name: &str| fuel_path(scenario, name).first().copied().unwrap_or(0.0);
    let mut offers = Vec::new();
    for g in &scenario.gencos {
        let learner = cfg.learners.contains(&g.name);
        for p in g.plants.iter().filter(|p| p.is_operating(year)) {
            offers.push(Offer {
                plant: p,
                genco: &g.name,
                cost: srmc(p, fuel_now(&p.fuel), carbon)?,
                learner,
            });
        }
    }
    let total_mw: f64 = offers.iter().map(|o| o.plant.capacity_mw).sum();
    let learner_mw: f64 = offers.iter().filter(|o| o.learner).map(|o| o.plant.capacity_mw).sum();
    if learner_mw <= 0.0 {
        return Err(Error::InvalidArgument(
            "learner GenCos own no operating capacity".into(),
        ));
    }

    let carbon_path: Vec<f64> = (0..scenario.config.horizon_yr as usize)
        .map(|t| scenario.carbon_schedule().price(t))
        .collect();
    let base_demand: Vec<f64> = steps.iter().map(|s| s.demand_mw).collect();
    let disc = Discretizer::new(
        cfg.q.buckets,
        &base_demand,
        &fuel_path(scenario, "gas"),
        &fuel_path(scenario, "coal"),
        &carbon_path,
        cap,
    );
    let (gas, coal) = (fuel_now("gas"), fuel_now("coal"));
    let residual = scenario
        .config
        .stochastic
        .demand_residual
        .map(|d| ResidualDistribution {
            distribution: d,
            sse_fit_score: 0.0,
        });

    let clear = |step: &TimeStep, learner_price: Option<f64>| {
        let bids: Vec<Bid> = offers
            .iter()
            .map(|o| Bid {
                plant_id: o.plant.id.clone(),
                genco_id: o.genco.to_string(),
                price: match (o.learner, learner_price) {
                    (true, Some(p)) => p,
                    _ => o.cost.min(cap),
                },
                quantity: available_quantity(o.plant, step),
            })
            .collect();
        clear_step(&bids, step.demand_mw, lost_load_price, Some(cap))
    };

    let mut records = Vec::with_capacity(cfg.episodes);
    let mut histogram = vec![0usize; q.actions()];
    for episode in 0..cfg.episodes {
        let eps = cfg.q.epsilon(episode, cfg.episodes);
        let mut rng = keyed_rng(cfg.seed, "bidding", episode as u64);
        let mut demand_rng = keyed_rng(cfg.seed, "demand", episode as u64);
        let episode_steps: Vec<TimeStep> = steps
            .iter()
            .map(|s| {
                let mut s = *s;
                if let Some(r) = &residual {
                    s.demand_mw = perturb_demand(s.demand_mw, r, &mut demand_rng);
                }
                s
            })
            .collect();

        let baseline: Vec<f64> = episode_steps
            .iter()
            .map(|s| clear(s, None).map(|r| r.clearing_price))
            .collect::<Result<_>>()?;

        let observe = |i: usize, last: f64| {
            let s = &episode_steps[i];
            disc.observe(s.hour, s.demand_mw, gas, coal, carbon, last)
        };
        let mut prices = Vec::with_capacity(episode_steps.len());
        let mut reward_sum = 0.0;
        let mut state = observe(0, 0.0);
        let last_episode = episode + 1 == cfg.episodes;
        for (i, step) in episode_steps.iter().enumerate() {
            let a = select_action(&q, &state, eps, &mut rng);
            if last_episode {
                histogram[a] += 1;
            }
            let result = clear(step, Some(q.prices[a]))?;
            let reward = match cfg.q.reward {
                RewardKind::ClearingPrice => result.clearing_price,
                RewardKind::Profit => {
                    let margin: f64 = result
                        .accepted
                        .iter()
                        .filter_map(|(id, mw)| {
                            offers
                                .iter()
                                .find(|o| o.learner && &o.plant.id == id)
                                .map(|o| mw * (result.clearing_price - o.cost))
                        })
                        .sum();
                    margin / learner_mw
                }
            };
            reward_sum += reward;
            prices.push(result.clearing_price);
            let next = (i + 1 < episode_steps.len()).then(|| observe(i + 1, result.clearing_price));
            q_update(&mut q, state, a, reward, next.as_ref(), cfg.q.alpha, cfg.q.gamma);
            if let Some(n) = next {
                state = n;
            }
        }
        records.push(EpisodeRecord {
            episode,
            mean_reward: reward_sum / episode_steps.len() as f64,
            avg_price: demand_weighted(&prices, &episode_steps),
            baseline_price: demand_weighted(&baseline, &episode_steps),
        });
    }
    let last = records.last().expect("at least one episode");
    Ok(MarketPowerReport {
        cap,
        learners: cfg.learners.iter().cloned().collect(),
        learner_capacity_share: learner_mw / total_mw,
        final_price: last.avg_price,
        baseline_price: last.baseline_price,
        histogram: q
            .prices
            .iter()
            .zip(&histogram)
            .map(|(p, c)| HistogramBin {
                price_bin: *p,
                count: *c,
            })
            .collect(),
        episodes: records,
        table: q,
    })
}
