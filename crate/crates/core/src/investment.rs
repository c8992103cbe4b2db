//! Capacity expansion: price expectations, cashflow appraisal by NPV and greedy investment.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{srmc, GenCo, PowerPlant, Technology};
use crate::error::{Error, Result};
use crate::market::{available_quantity, clear_step, Bid, Loan};
use crate::stochastic::gaussian;
use crate::temporal::TimeStep;

/// A GenCo's linear expectation of future prices, `price = m · demand + c`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictedPriceDurationCurve {
    /// £/MWh per MW of demand.
    pub m: f64,
    /// £/MWh
    pub c: f64,
    /// Optional per-year `(m, c)` overriding the single pair; the last entry is held.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_year: Vec<(f64, f64)>,
    #[serde(default)]
    pub sigma_m: f64,
    #[serde(default)]
    pub sigma_c: f64,
}

impl PredictedPriceDurationCurve {
    pub fn linear(m: f64, c: f64) -> Self {
        PredictedPriceDurationCurve {
            m,
            c,
            ..Default::default()
        }
    }

    pub fn coefficients(&self, year_offset: usize) -> (f64, f64) {
        match self.per_year.len() {
            0 => (self.m, self.c),
            n => self.per_year[year_offset.min(n - 1)],
        }
    }

    pub fn price(&self, demand_mw: f64, year_offset: usize) -> f64 {
        let (m, c) = self.coefficients(year_offset);
        m * demand_mw + c
    }

    /// The curve one GenCo sees: each coefficient shifted by Gaussian noise with std σ_m, σ_c.
    /// With both σ zero the curve is returned unchanged and no randomness is consumed.
    pub fn perturbed<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        if self.sigma_m == 0.0 && self.sigma_c == 0.0 {
            return self.clone();
        }
        let dm = gaussian(0.0, self.sigma_m, rng);
        let dc = gaussian(0.0, self.sigma_c, rng);
        PredictedPriceDurationCurve {
            m: self.m + dm,
            c: self.c + dc,
            per_year: self.per_year.iter().map(|(m, c)| (m + dm, c + dc)).collect(),
            sigma_m: 0.0,
            sigma_c: 0.0,
        }
    }
}

/// Yearly net cashflows and the rate they are discounted at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashflowAppraisal {
    pub discount_rate: f64,
    /// Net cashflow for years 0..N.
    pub cashflows: Vec<f64>,
}

/// Σ_t R_t / (1 + i)^t.
pub fn npv(appraisal: &CashflowAppraisal) -> f64 {
    let base = 1.0 + appraisal.discount_rate;
    appraisal
        .cashflows
        .iter()
        .enumerate()
        .map(|(t, r)| r / base.powi(t as i32))
        .sum()
}

/// Expected market conditions for each year after a decision (index 0 = first project year).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarketForecast {
    /// Multiplier on the base demand profile.
    pub demand_scale: Vec<f64>,
    /// £/MWh-thermal per fuel name.
    pub fuel_prices: HashMap<String, Vec<f64>>,
    /// £/tCO2
    pub carbon_prices: Vec<f64>,
}

impl MarketForecast {
    pub fn flat(years: usize, fuel_prices: &HashMap<String, f64>, carbon: f64) -> Self {
        MarketForecast {
            demand_scale: vec![1.0; years],
            fuel_prices: fuel_prices.iter().map(|(k, v)| (k.clone(), vec![*v; years])).collect(),
            carbon_prices: vec![carbon; years],
        }
    }

    pub fn horizon(&self) -> usize {
        let fuel = self.fuel_prices.values().map(Vec::len).min().unwrap_or(usize::MAX);
        self.demand_scale.len().min(self.carbon_prices.len()).min(fuel)
    }

    fn fuel_price(&self, fuel: &str, t: usize) -> f64 {
        self.fuel_prices.get(fuel).map(|v| v[t]).unwrap_or(0.0)
    }
}

/// Yearly cashflows of a prospective plant.
///
/// Pre-development costs are spread evenly over the pre-development years and construction
/// plus infrastructure costs over the construction years (a zero-length phase books its cost
/// in the phase's first year). In each operating year the plant runs in every period whose
/// expected price, plus any nuclear subsidy, covers its expected marginal cost, earning
/// `(price − marginal cost + subsidy) · MWh`; fixed O&M is charged every operating year.
pub fn expected_cashflows(
    candidate: &PowerPlant,
    ppdc: &PredictedPriceDurationCurve,
    ppdc_year: usize,
    steps: &[TimeStep],
    forecast: &MarketForecast,
    nuclear_subsidy: f64,
    discount_rate: f64,
) -> Result<CashflowAppraisal> {
    let pd = candidate.predev_period_yr as usize;
    let cd = candidate.construction_period_yr as usize;
    let n = candidate.lifetime_yr() as usize;
    if forecast.horizon() < n {
        return Err(Error::Horizon {
            needed: n,
            have: forecast.horizon(),
        });
    }
    let subsidy = if candidate.technology == Technology::Nuclear {
        nuclear_subsidy
    } else {
        0.0
    };
    let mut flows = vec![0.0; n];
    let predev = candidate.predev_cost * candidate.capacity_mw;
    let build = candidate.construction_cost * candidate.capacity_mw + candidate.infrastructure_cost;
    if pd == 0 {
        flows[0] -= predev;
    } else {
        flows[..pd].iter_mut().for_each(|f| *f -= predev / pd as f64);
    }
    if cd == 0 {
        flows[pd.min(n - 1)] -= build;
    } else {
        flows[pd..pd + cd].iter_mut().for_each(|f| *f -= build / cd as f64);
    }
    for (t, flow) in flows.iter_mut().enumerate().skip(pd + cd) {
        let cost = srmc(
            candidate,
            forecast.fuel_price(&candidate.fuel, t),
            forecast.carbon_prices[t],
        )?;
        let mut margin = 0.0;
        for step in steps {
            let price = ppdc.price(step.demand_mw * forecast.demand_scale[t], ppdc_year);
            if price + subsidy >= cost {
                let mwh = available_quantity(candidate, step) * step.duration_h;
                margin += mwh * (price - cost + subsidy);
            }
        }
        *flow += margin - candidate.fixed_om * candidate.capacity_mw;
    }
    Ok(CashflowAppraisal {
        discount_rate,
        cashflows: flows,
    })
}

/// Trend model used to extrapolate a yearly series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastModel {
    Linear,
    /// Exponential growth, falling back to linear when the exponential fit is unusable.
    Exponential,
}

/// Extrapolated values and the model actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub values: Vec<f64>,
    pub used: ForecastModel,
}

/// Least-squares line through `(t, y_t)`, t = 0..n. Returns (intercept, slope).
pub fn fit_linear(history: &[f64]) -> (f64, f64) {
    let n = history.len() as f64;
    let mt = (n - 1.0) / 2.0;
    let my = history.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (t, y) in history.iter().enumerate() {
        let dt = t as f64 - mt;
        sty += dt * (y - my);
        stt += dt * dt;
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    (my - slope * mt, slope)
}

/// Fit `y = a · b^t` by regressing ln y on t. `None` when any value is non-positive or the fit
/// is not finite.
pub fn fit_exponential(history: &[f64]) -> Option<(f64, f64)> {
    if history.iter().any(|y| !(*y > 0.0)) {
        return None;
    }
    let logs: Vec<f64> = history.iter().map(|y| y.ln()).collect();
    let (la, lb) = fit_linear(&logs);
    let (a, b) = (la.exp(), lb.exp());
    (a.is_finite() && b.is_finite()).then_some((a, b))
}

fn sse(history: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    history.iter().enumerate().map(|(t, y)| (y - f(t as f64)).powi(2)).sum()
}

/// Extrapolate `horizon` values past the end of `history`.
///
/// In exponential mode the linear fit is used instead when the data has non-positive values,
/// the exponential fit is not finite, or its residual SSE exceeds the linear one.
pub fn forecast_series(history: &[f64], horizon: usize, model: ForecastModel) -> Result<Forecast> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            got: history.len(),
        });
    }
    let n = history.len();
    let (c, s) = fit_linear(history);
    let linear = |t: f64| c + s * t;
    if model == ForecastModel::Exponential {
        if let Some((a, b)) = fit_exponential(history) {
            let exp = |t: f64| a * b.powf(t);
            if sse(history, exp) <= sse(history, linear) {
                return Ok(Forecast {
                    values: (n..n + horizon).map(|t| exp(t as f64)).collect(),
                    used: ForecastModel::Exponential,
                });
            }
        }
    }
    Ok(Forecast {
        values: (n..n + horizon).map(|t| linear(t as f64)).collect(),
        used: ForecastModel::Linear,
    })
}

/// Discount rates drawn for one GenCo decision round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountRates {
    pub standard: f64,
    pub nuclear: f64,
}

impl DiscountRates {
    pub fn for_technology(&self, tech: Technology) -> f64 {
        if tech == Technology::Nuclear {
            self.nuclear
        } else {
            self.standard
        }
    }
}

/// Shared inputs for appraising a menu of candidates.
#[derive(Debug, Clone)]
pub struct InvestmentContext<'a> {
    /// First year of the prospective projects.
    pub project_year: i32,
    pub ppdc_year: usize,
    pub steps: &'a [TimeStep],
    pub forecast: &'a MarketForecast,
    pub nuclear_subsidy: f64,
}

/// A committed investment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Investment {
    pub year: i32,
    pub genco: String,
    pub plant: PowerPlant,
    pub npv_per_mw: f64,
    pub loan: Option<Loan>,
}

/// Appraise every candidate, rank positive-NPV ones by NPV per MW (menu order on ties) and
/// build each one the GenCo can afford the down payment for. Cash is debited by the down
/// payment; the rest is financed as an annuity over the operating period.
pub fn decide_investments(
    genco: &mut GenCo,
    menu: &[PowerPlant],
    ppdc: &PredictedPriceDurationCurve,
    ctx: &InvestmentContext<'_>,
    rates: DiscountRates,
) -> Result<Vec<Investment>> {
    let mut ranked = Vec::with_capacity(menu.len());
    for (i, cand) in menu.iter().enumerate() {
        let rate = rates.for_technology(cand.technology);
        let appraisal = expected_cashflows(
            cand,
            ppdc,
            ctx.ppdc_year,
            ctx.steps,
            ctx.forecast,
            ctx.nuclear_subsidy,
            rate,
        )?;
        let value = npv(&appraisal) / cand.capacity_mw;
        if value > 0.0 {
            ranked.push((value, i));
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut out = Vec::new();
    for (value, i) in ranked {
        let cand = &menu[i];
        let capital = cand.capital_cost();
        let down = genco.down_payment_fraction * capital;
        if down > genco.cash {
            continue;
        }
        genco.cash -= down;
        let mut plant = cand.clone();
        plant.id = format!("{}-{}-{}-{}", genco.name, cand.technology, ctx.project_year, cand.id);
        plant.commission_year = ctx.project_year + cand.lead_time_yr() as i32;
        let financed = capital - down;
        let loan = (financed > 0.0).then(|| {
            Loan::annuity(
                &genco.name,
                &plant.id,
                financed,
                rates.for_technology(cand.technology),
                cand.operating_period_yr,
                plant.commission_year,
            )
        });
        genco.plants.push(plant.clone());
        out.push(Investment {
            year: ctx.project_year,
            genco: genco.name.clone(),
            plant,
            npv_per_mw: value,
            loan,
        });
    }
    Ok(out)
}

/// Weighted least-squares line `y = m x + c`. A single distinct x gives `m = 0`.
pub fn weighted_linear_fit(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let mx = points.iter().map(|p| p.0 * p.2).sum::<f64>() / sw;
    let my = points.iter().map(|p| p.1 * p.2).sum::<f64>() / sw;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y, w) in points {
        sxy += w * (x - mx) * (y - my);
        sxx += w * (x - mx) * (x - mx);
    }
    let m = if sxx > 1e-12 * sw * mx.abs().max(1.0).powi(2) {
        sxy / sxx
    } else {
        0.0
    };
    (m, my - m * mx)
}

/// Price curve from simulating one year of the projected fleet bidding forecast marginal costs.
///
/// Periods cleared at the lost-load price are left out of the fit, which amounts to replacing
/// them by the fitted line. If every period is short of supply the curve is flat at the
/// lost-load price.
pub fn endogenous_price_curve(
    fleet: &[PowerPlant],
    steps: &[TimeStep],
    demand_scale: f64,
    fuel_prices: &HashMap<String, f64>,
    carbon_price: f64,
    lost_load_price: f64,
) -> Result<PredictedPriceDurationCurve> {
    let bids_template: Vec<(Bid, &PowerPlant)> = fleet
        .iter()
        .map(|p| {
            let price = srmc(p, fuel_prices.get(&p.fuel).copied().unwrap_or(0.0), carbon_price)?;
            Ok((
                Bid {
                    plant_id: p.id.clone(),
                    genco_id: String::new(),
                    price,
                    quantity: 0.0,
                },
                p,
            ))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(steps.len());
    for step in steps {
        let bids: Vec<Bid> = bids_template
            .iter()
            .map(|(b, p)| Bid {
                quantity: available_quantity(p, step),
                ..b.clone()
            })
            .collect();
        let demand = step.demand_mw * demand_scale;
        let r = clear_step(&bids, demand, lost_load_price, None)?;
        if r.lost_load_mw == 0.0 {
            points.push((demand, r.clearing_price, step.duration_h));
        }
    }
    if points.is_empty() {
        return Ok(PredictedPriceDurationCurve::linear(0.0, lost_load_price));
    }
    let (m, c) = weighted_linear_fit(&points);
    Ok(PredictedPriceDurationCurve::linear(m, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::plant;
    use crate::stochastic::stream_rng;
    use proptest::prelude::*;

    fn year_steps(demand: f64) -> Vec<TimeStep> {
        vec![TimeStep {
            day: 0,
            hour: 0,
            demand_mw: demand,
            capacity_factors: [0.0; 3],
            duration_h: 8760.0,
        }]
    }

    fn flat_forecast(years: usize) -> MarketForecast {
        MarketForecast::flat(years, &HashMap::from([("gas".to_string(), 20.0)]), 0.0)
    }

    #[test]
    fn npv_examples() {
        let a = |i, r: Vec<f64>| {
            npv(&CashflowAppraisal {
                discount_rate: i,
                cashflows: r,
            })
        };
        assert_eq!(a(0.0, vec![100.0; 3]), 300.0);
        assert!((a(0.1, vec![100.0; 3]) - (100.0 + 100.0 / 1.1 + 100.0 / 1.21)).abs() < 1e-9);
        assert!((a(0.1, vec![100.0; 3]) - 273.553_719).abs() < 1e-6);
        assert_eq!(a(0.05, vec![]), 0.0);
    }

    #[test]
    fn zero_cost_plant_earns_flat_price() {
        let mut p = plant("x", Technology::Ccgt, 1.0);
        p.fuel = "none".into();
        p.operating_period_yr = 1;
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 40.0);
        let ap = expected_cashflows(&p, &ppdc, 0, &year_steps(100.0), &flat_forecast(1), 0.0, 0.05).unwrap();
        assert_eq!(ap.cashflows, vec![8760.0 * 40.0]);
    }

    #[test]
    fn nuclear_subsidy_only_revenue() {
        let mut p = plant("n", Technology::Nuclear, 1.0);
        p.operating_period_yr = 1;
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 0.0);
        let ap = expected_cashflows(&p, &ppdc, 0, &year_steps(100.0), &flat_forecast(1), 120.0, 0.05).unwrap();
        assert_eq!(ap.cashflows, vec![8760.0 * 120.0]);
    }

    #[test]
    fn never_dispatched_plant_only_pays_costs() {
        let mut p = plant("g", Technology::Ccgt, 10.0);
        p.fuel = "gas".into();
        p.efficiency = 0.5;
        p.predev_period_yr = 1;
        p.predev_cost = 100.0;
        p.construction_period_yr = 2;
        p.construction_cost = 300.0;
        p.infrastructure_cost = 1000.0;
        p.fixed_om = 5.0;
        p.operating_period_yr = 3;
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 30.0);
        let ap = expected_cashflows(&p, &ppdc, 0, &year_steps(100.0), &flat_forecast(6), 0.0, 0.1).unwrap();
        assert_eq!(ap.cashflows, vec![-1000.0, -2000.0, -2000.0, -50.0, -50.0, -50.0]);
        let expected: f64 = ap
            .cashflows
            .iter()
            .enumerate()
            .map(|(t, r)| r / 1.1f64.powi(t as i32))
            .sum();
        assert!((npv(&ap) - expected).abs() < 1e-9);
    }

    #[test]
    fn short_forecast_is_horizon_error() {
        let mut p = plant("x", Technology::Ccgt, 1.0);
        p.operating_period_yr = 5;
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 40.0);
        assert!(matches!(
            expected_cashflows(&p, &ppdc, 0, &year_steps(1.0), &flat_forecast(3), 0.0, 0.05),
            Err(Error::Horizon { needed: 5, have: 3 })
        ));
    }

    #[test]
    fn exponential_forecast_recovers_growth() {
        let h: Vec<f64> = (0..10).map(|t| 100.0 * 1.02f64.powi(t)).collect();
        let (_, b) = fit_exponential(&h).unwrap();
        assert!((1.0199..=1.0201).contains(&b));
        let f = forecast_series(&h, 3, ForecastModel::Exponential).unwrap();
        assert_eq!(f.used, ForecastModel::Exponential);
        assert!((f.values[0] - 100.0 * 1.02f64.powi(10)).abs() < 1e-6);
    }

    #[test]
    fn linear_forecast_next_value() {
        let f = forecast_series(&[5.0, 7.0, 9.0, 11.0], 2, ForecastModel::Linear).unwrap();
        assert!((f.values[0] - 13.0).abs() < 1e-12);
        assert!((f.values[1] - 15.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_falls_back_on_zero() {
        let f = forecast_series(&[0.0, 1.0, 2.0], 1, ForecastModel::Exponential).unwrap();
        assert_eq!(f.used, ForecastModel::Linear);
        assert!((f.values[0] - 3.0).abs() < 1e-12);
        assert!(matches!(
            forecast_series(&[1.0], 1, ForecastModel::Linear),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    fn candidate(id: &str, capacity: f64, construction_cost: f64) -> PowerPlant {
        let mut p = plant(id, Technology::Ccgt, capacity);
        p.fuel = "none".into();
        p.operating_period_yr = 1;
        p.construction_cost = construction_cost;
        p
    }

    fn ctx<'a>(steps: &'a [TimeStep], f: &'a MarketForecast) -> InvestmentContext<'a> {
        InvestmentContext {
            project_year: 2020,
            ppdc_year: 0,
            steps,
            forecast: f,
            nuclear_subsidy: 0.0,
        }
    }

    const RATES: DiscountRates = DiscountRates {
        standard: 0.05,
        nuclear: 0.1,
    };

    #[test]
    fn negative_npv_means_no_investment() {
        let steps = year_steps(100.0);
        let f = flat_forecast(1);
        let mut g = GenCo::new("g", 1e12);
        let menu = [candidate("a", 1.0, 1e9)];
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 40.0);
        assert!(decide_investments(&mut g, &menu, &ppdc, &ctx(&steps, &f), RATES)
            .unwrap()
            .is_empty());
        assert_eq!(g.cash, 1e12);
    }

    #[test]
    fn exact_down_payment_is_affordable() {
        let steps = year_steps(100.0);
        let f = flat_forecast(1);
        let mut g = GenCo::new("g", 250.0);
        g.down_payment_fraction = 0.25;
        let menu = [candidate("a", 1.0, 1000.0)];
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 40.0);
        let inv = decide_investments(&mut g, &menu, &ppdc, &ctx(&steps, &f), RATES).unwrap();
        assert_eq!(inv.len(), 1);
        assert_eq!(g.cash, 0.0);
        let loan = inv[0].loan.as_ref().unwrap();
        assert!((loan.yearly_payment - 750.0 * 1.05).abs() < 1e-9);
        assert_eq!(inv[0].plant.commission_year, 2020);
    }

    #[test]
    fn best_npv_per_mw_chosen_when_cash_is_short() {
        let steps = year_steps(100.0);
        let f = flat_forecast(1);
        let mut g = GenCo::new("g", 300.0);
        g.down_payment_fraction = 1.0;
        // "big" has the larger total NPV, "small" the larger NPV per MW
        let menu = [candidate("big", 2.0, 150.0), candidate("small", 1.0, 100.0)];
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 40.0);
        let v_big = (2.0 * 8760.0 * 40.0 - 300.0) / 2.0;
        let v_small = 8760.0 * 40.0 - 100.0;
        assert!(v_big < v_small);
        assert!(2.0 * v_big > v_small);
        let inv = decide_investments(&mut g, &menu, &ppdc, &ctx(&steps, &f), RATES).unwrap();
        assert_eq!(inv.len(), 1);
        assert!(inv[0].plant.id.ends_with("small"));
        assert!((inv[0].npv_per_mw - v_small).abs() < 1e-6);
    }

    #[test]
    fn commissioning_delayed_by_lead_time() {
        let steps = year_steps(100.0);
        let f = flat_forecast(10);
        let mut g = GenCo::new("g", 1e9);
        let mut c = candidate("a", 1.0, 10.0);
        c.predev_period_yr = 2;
        c.construction_period_yr = 3;
        let ppdc = PredictedPriceDurationCurve::linear(0.0, 40.0);
        let inv = decide_investments(&mut g, &[c], &ppdc, &ctx(&steps, &f), RATES).unwrap();
        assert_eq!(inv[0].plant.commission_year, 2025);
    }

    #[test]
    fn flat_market_gives_flat_curve() {
        let mut fleet = Vec::new();
        for i in 0..4 {
            let mut p = plant(&format!("p{i}"), Technology::Ccgt, 100.0);
            p.variable_om = 30.0;
            fleet.push(p);
        }
        let steps: Vec<TimeStep> = [120.0, 200.0, 310.0]
            .iter()
            .map(|&d| TimeStep {
                day: 0,
                hour: 0,
                demand_mw: d,
                capacity_factors: [0.0; 3],
                duration_h: 100.0,
            })
            .collect();
        let c = endogenous_price_curve(&fleet, &steps, 1.0, &HashMap::new(), 0.0, 6000.0).unwrap();
        assert!(c.m.abs() < 1e-12);
        assert!((c.c - 30.0).abs() < 1e-9);
        let empty = endogenous_price_curve(&[], &steps, 1.0, &HashMap::new(), 0.0, 6000.0).unwrap();
        assert_eq!((empty.m, empty.c), (0.0, 6000.0));
    }

    #[test]
    fn zero_sigma_curves_identical() {
        let c = PredictedPriceDurationCurve::linear(0.002, 10.0);
        let mut rng = stream_rng(1, 1);
        assert_eq!(c.perturbed(&mut rng), c);
        let mut noisy = c.clone();
        noisy.sigma_c = 1.0;
        assert_ne!(noisy.perturbed(&mut rng).c, 10.0);
    }

    proptest! {
        #[test]
        fn npv_decreasing_in_rate(
            r0 in -1e4f64..1e4,
            rest in prop::collection::vec(1.0f64..1e4, 1..30),
            i in 0.0f64..0.5, di in 1e-4f64..0.5,
        ) {
            let mut flows = vec![r0];
            flows.extend(rest);
            let lo = npv(&CashflowAppraisal { discount_rate: i, cashflows: flows.clone() });
            let hi = npv(&CashflowAppraisal { discount_rate: i + di, cashflows: flows.clone() });
            prop_assert!(hi < lo);
            let zero = npv(&CashflowAppraisal { discount_rate: 0.0, cashflows: flows.clone() });
            prop_assert!((zero - flows.iter().sum::<f64>()).abs() < 1e-6);
        }

        #[test]
        fn never_overspends(cash in 0.0f64..5e3, dp in 0.0f64..1.0, costs in prop::collection::vec(1.0f64..3e3, 1..6)) {
            let steps = year_steps(100.0);
            let f = flat_forecast(1);
            let mut g = GenCo::new("g", cash);
            g.down_payment_fraction = dp;
            let menu: Vec<PowerPlant> = costs.iter().enumerate()
                .map(|(i, c)| candidate(&format!("c{i}"), 1.0, *c)).collect();
            let ppdc = PredictedPriceDurationCurve::linear(0.0, 1.0);
            decide_investments(&mut g, &menu, &ppdc, &ctx(&steps, &f), RATES).unwrap();
            prop_assert!(g.cash >= 0.0);
        }
    }
}
