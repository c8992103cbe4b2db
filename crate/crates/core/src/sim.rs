//! The yearly simulation loop: bid, clear, settle, forecast, invest, retire.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{srmc, BiddingStrategy, CarbonTaxSchedule, GenCo, PowerPlant, Technology};
use crate::error::{Error, Result};
use crate::investment::{
    decide_investments, endogenous_price_curve, forecast_series, DiscountRates, ForecastModel, InvestmentContext,
    MarketForecast, PredictedPriceDurationCurve,
};
use crate::market::{available_quantity, clear_step, relative_carbon_intensity, Bid, Loan, SettledStep, YearLedger};
use crate::scenario::{PriceCurveConfig, Scenario};
use crate::stochastic::{gaussian, perturb_demand, stream_rng, ResidualDistribution, SimRng};
use crate::temporal::{build_time_steps, TimeStep};

/// Random stream for one named entity, independent of how many other entities exist.
pub fn keyed_rng(seed: u64, key: &str, index: u64) -> SimRng {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    stream_rng(seed ^ h, index)
}

/// The scenario's clearing periods for one year at base demand.
pub fn prepare_steps(scenario: &Scenario) -> Result<Vec<TimeStep>> {
    build_time_steps(&scenario.series, scenario.config.temporal, scenario.config.cluster_seed)
}

/// Per-run replacements for scenario settings, used by the optimisation harnesses.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub carbon: Option<CarbonTaxSchedule>,
    pub price_curve: Option<PredictedPriceDurationCurve>,
    pub nuclear_subsidy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingRecord {
    pub year: i32,
    pub step: usize,
    pub demand_mw: f64,
    pub clearing_price: f64,
    pub lost_load_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestmentRecord {
    pub year: i32,
    pub genco: String,
    pub technology: Technology,
    pub capacity_mw: f64,
    pub npv_per_mw: f64,
    pub commissioning_year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRecord {
    pub year: i32,
    pub technology: Technology,
    pub mwh: f64,
    /// Percent of the year's generation.
    pub share: f64,
    pub tco2: f64,
}

/// Everything a run needs to continue; written after every simulated year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Offset of the next year to simulate.
    pub year_index: usize,
    pub gencos: Vec<GenCo>,
    pub loans: Vec<Loan>,
    pub ledgers: Vec<YearLedger>,
    pub clearing: Vec<ClearingRecord>,
    pub investments: Vec<InvestmentRecord>,
    pub carbon_history: Vec<f64>,
    pub base_carbon_intensity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub ledgers: Vec<YearLedger>,
    pub clearing: Vec<ClearingRecord>,
    pub investments: Vec<InvestmentRecord>,
    pub base_carbon_intensity: f64,
    pub gencos: Vec<GenCo>,
}

impl SimulationResult {
    pub fn mix(&self) -> Vec<MixRecord> {
        let mut out = Vec::new();
        for l in &self.ledgers {
            let shares = l.shares();
            for (tech, acc) in &l.technologies {
                out.push(MixRecord {
                    year: l.year,
                    technology: *tech,
                    mwh: acc.mwh,
                    share: shares[tech],
                    tco2: acc.tco2,
                });
            }
        }
        out
    }

    pub fn final_ledger(&self) -> Option<&YearLedger> {
        self.ledgers.last()
    }

    pub fn relative_carbon_intensity(&self, ledger: &YearLedger) -> Result<f64> {
        relative_carbon_intensity(ledger, self.base_carbon_intensity)
    }
}

enum CurveSource {
    Exogenous(PredictedPriceDurationCurve),
    Endogenous { lookahead_yr: usize },
}

pub struct Simulation<'a> {
    scenario: &'a Scenario,
    steps: &'a [TimeStep],
    carbon: CarbonTaxSchedule,
    curve: CurveSource,
    nuclear_subsidy: f64,
    residual: Option<ResidualDistribution>,
    seed: u64,
    state: SimState,
}

impl<'a> Simulation<'a> {
    /// A fresh run. `steps` come from [`prepare_steps`] and can be shared between runs.
    pub fn new(scenario: &'a Scenario, steps: &'a [TimeStep], seed: u64, overrides: RunOverrides) -> Result<Self> {
        let mut gencos = scenario.gencos.clone();
        if scenario.config.stochastic.variable_om {
            for p in gencos.iter_mut().flat_map(|g| g.plants.iter_mut()) {
                sample_variable_om(scenario, seed, p);
            }
        }
        if gencos.iter().any(|g| g.strategy == BiddingStrategy::Learned) {
            log::warn!("learned bidding only runs in the market-power experiment; bidding SRMC here");
        }
        let state = SimState {
            year_index: 0,
            gencos,
            loans: Vec::new(),
            ledgers: Vec::new(),
            clearing: Vec::new(),
            investments: Vec::new(),
            carbon_history: Vec::new(),
            base_carbon_intensity: scenario.config.base_carbon_intensity,
        };
        Simulation::resume(scenario, steps, seed, overrides, state)
    }

    /// Continue a run from a saved state. The seed and overrides must match the original run.
    pub fn resume(
        scenario: &'a Scenario,
        steps: &'a [TimeStep],
        seed: u64,
        overrides: RunOverrides,
        state: SimState,
    ) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidArgument("no clearing periods".into()));
        }
        let c = &scenario.config;
        let curve = match (overrides.price_curve, &c.price_curve) {
            (Some(p), _) => CurveSource::Exogenous(p),
            (
                None,
                PriceCurveConfig::Exogenous {
                    m,
                    c,
                    per_year,
                    sigma_m,
                    sigma_c,
                },
            ) => CurveSource::Exogenous(PredictedPriceDurationCurve {
                m: *m,
                c: *c,
                per_year: per_year.clone(),
                sigma_m: *sigma_m,
                sigma_c: *sigma_c,
            }),
            (None, PriceCurveConfig::Endogenous { lookahead_yr }) => CurveSource::Endogenous {
                lookahead_yr: *lookahead_yr as usize,
            },
        };
        Ok(Simulation {
            scenario,
            steps,
            carbon: overrides.carbon.unwrap_or_else(|| scenario.carbon_schedule()),
            curve,
            nuclear_subsidy: overrides.nuclear_subsidy.unwrap_or(c.nuclear_subsidy),
            residual: c.stochastic.demand_residual.map(|d| ResidualDistribution {
                distribution: d,
                sse_fit_score: 0.0,
            }),
            seed,
            state,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn is_finished(&self) -> bool {
        self.state.year_index >= self.scenario.config.horizon_yr as usize
    }

    /// Run all remaining years.
    pub fn run(mut self) -> Result<SimulationResult> {
        while !self.is_finished() {
            self.step_year()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> SimulationResult {
        let base = self
            .state
            .base_carbon_intensity
            .or_else(|| self.state.ledgers.first().map(YearLedger::carbon_intensity))
            .unwrap_or(0.0);
        SimulationResult {
            ledgers: self.state.ledgers,
            clearing: self.state.clearing,
            investments: self.state.investments,
            base_carbon_intensity: base,
            gencos: self.state.gencos,
        }
    }

    fn demand_scale(&self, offset: usize) -> f64 {
        (1.0 + self.scenario.config.demand_growth_per_yr).powi(offset as i32)
    }

    /// Fuel prices one GenCo pays in a year, with its purchase noise when enabled.
    fn fuel_prices(&self, genco: &str, offset: usize) -> HashMap<String, f64> {
        let noisy = self.scenario.config.stochastic.fuel_noise;
        self.scenario
            .config
            .fuels
            .iter()
            .map(|f| {
                let mut p = f.price(offset);
                if noisy && f.price_noise_std > 0.0 {
                    let mut rng = keyed_rng(self.seed, &format!("fuel/{genco}/{}", f.name), offset as u64);
                    p = (p + gaussian(0.0, f.price_noise_std, &mut rng)).max(0.0);
                }
                (f.name.clone(), p)
            })
            .collect()
    }

    /// Simulate one year.
    pub fn step_year(&mut self) -> Result<()> {
        if self.is_finished() {
            return Err(Error::InvalidState("simulation already reached its horizon".into()));
        }
        let t = self.state.year_index;
        let year = self.scenario.config.start_year + t as i32;
        let cap = self.scenario.config.market_cap;
        let lost_load_price = self.scenario.config.lost_load_price;
        let carbon = self.carbon.price(t);
        self.state.carbon_history.push(carbon);

        let mut marginal_costs = HashMap::new();
        let mut offers: Vec<(Bid, &PowerPlant)> = Vec::new();
        let fuel_by_genco: Vec<HashMap<String, f64>> =
            self.state.gencos.iter().map(|g| self.fuel_prices(&g.name, t)).collect();
        for (g, fuel) in self.state.gencos.iter().zip(&fuel_by_genco) {
            for p in g.plants.iter().filter(|p| p.is_operating(year)) {
                let cost = srmc(p, fuel.get(&p.fuel).copied().unwrap_or(0.0), carbon)?;
                marginal_costs.insert(p.id.clone(), cost);
                let price = cap.map_or(cost, |c| cost.min(c));
                offers.push((
                    Bid {
                        plant_id: p.id.clone(),
                        genco_id: g.name.clone(),
                        price,
                        quantity: 0.0,
                    },
                    p,
                ));
            }
        }

        let scale = self.demand_scale(t);
        let mut demand_rng = keyed_rng(self.seed, "demand", t as u64);
        let mut settled = Vec::with_capacity(self.steps.len());
        for (i, base) in self.steps.iter().enumerate() {
            let mut step = *base;
            step.demand_mw *= scale;
            if let Some(r) = &self.residual {
                step.demand_mw = perturb_demand(step.demand_mw, r, &mut demand_rng);
            }
            let bids: Vec<Bid> = offers
                .iter()
                .map(|(b, p)| Bid {
                    quantity: available_quantity(p, &step),
                    ..b.clone()
                })
                .collect();
            let result = clear_step(&bids, step.demand_mw, lost_load_price, cap)?;
            self.state.clearing.push(ClearingRecord {
                year,
                step: i,
                demand_mw: result.demand_mw,
                clearing_price: result.clearing_price,
                lost_load_mw: result.lost_load_mw,
            });
            settled.push(SettledStep { step, result });
        }
        drop(offers);

        let ledger = settle_year_for(self, year, &settled, &marginal_costs);
        if self.state.base_carbon_intensity.is_none() && t == 0 {
            self.state.base_carbon_intensity = Some(ledger.carbon_intensity());
        }
        self.state.ledgers.push(ledger);

        let last_year = t + 1 >= self.scenario.config.horizon_yr as usize;
        if self.scenario.config.investment && !last_year && !self.scenario.candidates.is_empty() {
            self.invest(t)?;
        }
        for g in &mut self.state.gencos {
            g.plants
                .retain(|p| p.commission_year + p.operating_period_yr as i32 > year + 1);
        }
        self.state.year_index += 1;
        Ok(())
    }

    /// History window of a yearly series ending at offset `t`, then its forecast from `t + 1`.
    fn forecast(&self, history: &[f64], window: usize, horizon: usize, model: ForecastModel) -> Result<Vec<f64>> {
        let start = history.len().saturating_sub(window.max(1));
        let h = &history[start..];
        if h.len() < 2 {
            return Ok(vec![*h.last().expect("history is never empty"); horizon]);
        }
        Ok(forecast_series(h, horizon, model)?
            .values
            .into_iter()
            .map(|v| v.max(0.0))
            .collect())
    }

    fn market_forecast(&self, t: usize, window: usize, horizon: usize) -> Result<MarketForecast> {
        let demand_hist: Vec<f64> = (0..=t).map(|s| self.demand_scale(s)).collect();
        let mut fuel_prices = HashMap::new();
        for f in &self.scenario.config.fuels {
            let hist: Vec<f64> = (0..=t).map(|s| f.price(s)).collect();
            fuel_prices.insert(
                f.name.clone(),
                self.forecast(&hist, window, horizon, ForecastModel::Linear)?,
            );
        }
        Ok(MarketForecast {
            demand_scale: self.forecast(&demand_hist, window, horizon, ForecastModel::Exponential)?,
            fuel_prices,
            carbon_prices: self.forecast(&self.state.carbon_history, window, horizon, ForecastModel::Linear)?,
        })
    }

    fn invest(&mut self, t: usize) -> Result<()> {
        let scenario = self.scenario;
        let cfg = &scenario.config;
        let year = cfg.start_year + t as i32;
        let project_year = year + 1;
        let menu = &scenario.candidates;
        let lookahead = match self.curve {
            CurveSource::Endogenous { lookahead_yr } => lookahead_yr,
            CurveSource::Exogenous(_) => 0,
        };
        let horizon = menu
            .iter()
            .map(|p| p.lifetime_yr() as usize)
            .max()
            .unwrap_or(1)
            .max(lookahead + 1);

        for gi in 0..self.state.gencos.len() {
            let name = self.state.gencos[gi].name.clone();
            let window = self.state.gencos[gi].forecast_window_yr as usize;
            let forecast = self.market_forecast(t, window, horizon)?;
            let ppdc = match &self.curve {
                CurveSource::Exogenous(curve) => {
                    curve.perturbed(&mut keyed_rng(self.seed, &format!("ppdc/{name}"), t as u64))
                }
                CurveSource::Endogenous { lookahead_yr } => {
                    let k = *lookahead_yr;
                    let target = project_year + k as i32;
                    let fleet: Vec<PowerPlant> = self
                        .state
                        .gencos
                        .iter()
                        .flat_map(|g| g.plants.iter())
                        .filter(|p| p.is_operating(target))
                        .cloned()
                        .collect();
                    let fuel: HashMap<String, f64> =
                        forecast.fuel_prices.iter().map(|(f, v)| (f.clone(), v[k])).collect();
                    endogenous_price_curve(
                        &fleet,
                        self.steps,
                        forecast.demand_scale[k],
                        &fuel,
                        forecast.carbon_prices[k],
                        cfg.lost_load_price,
                    )?
                }
            };
            let genco = &mut self.state.gencos[gi];
            let z = if cfg.stochastic.wacc {
                gaussian(0.0, 1.0, &mut keyed_rng(self.seed, &format!("wacc/{name}"), t as u64))
            } else {
                0.0
            };
            let rates = DiscountRates {
                standard: genco.wacc_mean + genco.wacc_std * z,
                nuclear: cfg.nuclear_wacc + genco.wacc_std * z,
            };
            let ctx = InvestmentContext {
                project_year,
                ppdc_year: t + 1,
                steps: self.steps,
                forecast: &forecast,
                nuclear_subsidy: self.nuclear_subsidy,
            };
            let made = decide_investments(genco, menu, &ppdc, &ctx, rates)?;
            for inv in made {
                if cfg.stochastic.variable_om {
                    if let Some(p) = genco.plants.iter_mut().find(|p| p.id == inv.plant.id) {
                        sample_variable_om(self.scenario, self.seed, p);
                    }
                }
                self.state.investments.push(InvestmentRecord {
                    year: inv.year,
                    genco: inv.genco.clone(),
                    technology: inv.plant.technology,
                    capacity_mw: inv.plant.capacity_mw,
                    npv_per_mw: inv.npv_per_mw,
                    commissioning_year: inv.plant.commission_year,
                });
                self.state.loans.extend(inv.loan);
            }
        }
        Ok(())
    }
}

fn settle_year_for(
    sim: &mut Simulation<'_>,
    year: i32,
    settled: &[SettledStep],
    mc: &HashMap<String, f64>,
) -> YearLedger {
    crate::market::settle_year(
        year,
        settled,
        &mut sim.state.gencos,
        mc,
        sim.nuclear_subsidy,
        &sim.state.loans,
    )
}

fn sample_variable_om(scenario: &Scenario, seed: u64, plant: &mut PowerPlant) {
    let s = &scenario.config.stochastic;
    let mut rng = keyed_rng(seed, &format!("vom/{}", plant.id), 0);
    let m = if s.variable_om_high > s.variable_om_low {
        rand::Rng::random_range(&mut rng, s.variable_om_low..=s.variable_om_high)
    } else {
        s.variable_om_low
    };
    plant.variable_om *= m;
}

/// Prepare the steps and run a scenario to its horizon.
pub fn run_scenario(scenario: &Scenario, seed: u64, overrides: RunOverrides) -> Result<SimulationResult> {
    let steps = prepare_steps(scenario)?;
    Simulation::new(scenario, &steps, seed, overrides)?.run()
}
