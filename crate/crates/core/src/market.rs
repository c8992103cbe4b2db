//! Uniform-price spot market: merit-order clearing of each period and yearly settlement.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::domain::{GenCo, PowerPlant, Technology};
use crate::error::{Error, Result};
use crate::temporal::TimeStep;

/// An offer to supply `quantity` MW at `price` £/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub plant_id: String,
    pub genco_id: String,
    pub price: f64,
    pub quantity: f64,
}

/// Outcome of clearing one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingResult {
    pub demand_mw: f64,
    /// (plant id, dispatched MW) in merit order.
    pub accepted: Vec<(String, f64)>,
    pub clearing_price: f64,
    pub lost_load_mw: f64,
}

impl ClearingResult {
    pub fn dispatched_mw(&self) -> f64 {
        self.accepted.iter().map(|(_, q)| q).sum()
    }
}

/// Unserved demand below this fraction of demand is treated as rounding noise.
const LOST_LOAD_TOLERANCE: f64 = 1e-9;

/// Clear one period: accept the cheapest bids until demand is met (the marginal bid may be
/// partly accepted) and pay everyone the highest accepted price. Unserved demand sets the
/// price to `lost_load_price`. Equal prices are dispatched in plant-id order.
pub fn clear_step(bids: &[Bid], demand_mw: f64, lost_load_price: f64, cap: Option<f64>) -> Result<ClearingResult> {
    if !(demand_mw >= 0.0) {
        return Err(Error::InvalidArgument(format!("demand must be >= 0, got {demand_mw}")));
    }
    for b in bids {
        if !(b.quantity >= 0.0 && b.quantity.is_finite()) {
            return Err(Error::InvalidBid {
                plant_id: b.plant_id.clone(),
                reason: format!("quantity must be >= 0, got {}", b.quantity),
            });
        }
        if !b.price.is_finite() {
            return Err(Error::InvalidBid {
                plant_id: b.plant_id.clone(),
                reason: "price must be finite".into(),
            });
        }
        if let Some(c) = cap {
            if b.price > c {
                return Err(Error::InvalidBid {
                    plant_id: b.plant_id.clone(),
                    reason: format!("price {} exceeds market cap {c}", b.price),
                });
            }
        }
    }
    let mut order: Vec<&Bid> = bids.iter().collect();
    order.sort_by(|a, b| a.price.total_cmp(&b.price).then_with(|| a.plant_id.cmp(&b.plant_id)));

    let mut remaining = demand_mw;
    let mut accepted = Vec::new();
    let mut marginal = None;
    for bid in order {
        if remaining <= 0.0 {
            break;
        }
        if bid.quantity <= 0.0 {
            continue;
        }
        let q = bid.quantity.min(remaining);
        remaining -= q;
        accepted.push((bid.plant_id.clone(), q));
        marginal = Some(bid.price);
    }
    let lost_load_mw = if remaining > LOST_LOAD_TOLERANCE * demand_mw.max(1.0) {
        remaining
    } else {
        0.0
    };
    let clearing_price = if demand_mw == 0.0 {
        0.0
    } else if lost_load_mw > 0.0 {
        lost_load_price
    } else {
        marginal.unwrap_or(0.0)
    };
    Ok(ClearingResult {
        demand_mw,
        accepted,
        clearing_price,
        lost_load_mw,
    })
}

/// MW a plant can offer in a period: capacity × capacity factor for intermittent plants,
/// capacity × availability otherwise.
pub fn available_quantity(plant: &PowerPlant, step: &TimeStep) -> f64 {
    match (plant.is_intermittent, plant.technology.resource()) {
        (true, Some(r)) => plant.capacity_mw * step.capacity_factor(r),
        _ => plant.capacity_mw * plant.availability,
    }
}

/// A financed share of a plant's capital, repaid as a fixed annuity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loan {
    pub genco: String,
    pub plant_id: String,
    pub yearly_payment: f64,
    pub first_year: i32,
    /// Inclusive.
    pub last_year: i32,
}

impl Loan {
    /// Annuity repaying `principal` over `years` at `rate`, starting in `first_year`.
    pub fn annuity(genco: &str, plant_id: &str, principal: f64, rate: f64, years: u32, first_year: i32) -> Self {
        let n = years.max(1) as f64;
        let payment = if rate.abs() < 1e-12 {
            principal / n
        } else {
            principal * rate / (1.0 - (1.0 + rate).powf(-n))
        };
        Loan {
            genco: genco.into(),
            plant_id: plant_id.into(),
            yearly_payment: payment,
            first_year,
            last_year: first_year + years.max(1) as i32 - 1,
        }
    }

    pub fn due(&self, year: i32) -> bool {
        (self.first_year..=self.last_year).contains(&year)
    }
}

/// A cleared period together with its duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettledStep {
    pub step: TimeStep,
    pub result: ClearingResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GencoAccount {
    pub market_income: f64,
    pub subsidy_income: f64,
    pub variable_costs: f64,
    pub fixed_costs: f64,
    pub loan_payments: f64,
    pub cash_after: f64,
    pub negative_cash: bool,
}

impl GencoAccount {
    pub fn net(&self) -> f64 {
        self.market_income + self.subsidy_income - self.variable_costs - self.fixed_costs - self.loan_payments
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TechAccount {
    pub mwh: f64,
    pub tco2: f64,
}

/// Yearly accounts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct YearLedger {
    pub year: i32,
    pub gencos: BTreeMap<String, GencoAccount>,
    pub technologies: BTreeMap<Technology, TechAccount>,
    /// Σ price·demand·duration / Σ demand·duration.
    pub average_price: f64,
    pub demand_mwh: f64,
    pub lost_load_mwh: f64,
}

impl YearLedger {
    pub fn generation_mwh(&self) -> f64 {
        self.technologies.values().map(|t| t.mwh).sum()
    }

    pub fn emissions_tco2(&self) -> f64 {
        self.technologies.values().map(|t| t.tco2).sum()
    }

    /// tCO2 per MWh generated; zero when nothing was generated.
    pub fn carbon_intensity(&self) -> f64 {
        let g = self.generation_mwh();
        if g > 0.0 {
            self.emissions_tco2() / g
        } else {
            0.0
        }
    }

    /// Share of generation per technology, in percent.
    pub fn shares(&self) -> BTreeMap<Technology, f64> {
        let g = self.generation_mwh();
        self.technologies
            .iter()
            .map(|(t, a)| (*t, if g > 0.0 { 100.0 * a.mwh / g } else { 0.0 }))
            .collect()
    }
}

/// Pay every dispatched plant the clearing price, add nuclear subsidy, charge variable,
/// fixed and loan costs, update GenCo cash and tally generation and emissions.
///
/// `marginal_costs` gives each plant's £/MWh variable cost for the year; plants missing from
/// it are charged nothing.
pub fn settle_year(
    year: i32,
    steps: &[SettledStep],
    gencos: &mut [GenCo],
    marginal_costs: &HashMap<String, f64>,
    nuclear_subsidy: f64,
    loans: &[Loan],
) -> YearLedger {
    let mut owner: HashMap<&str, (usize, &PowerPlant)> = HashMap::new();
    for (gi, g) in gencos.iter().enumerate() {
        for p in &g.plants {
            owner.insert(p.id.as_str(), (gi, p));
        }
    }
    let mut accounts = vec![GencoAccount::default(); gencos.len()];
    let mut techs: BTreeMap<Technology, TechAccount> = BTreeMap::new();
    let (mut price_energy, mut demand_mwh, mut lost) = (0.0, 0.0, 0.0);

    for s in steps {
        let dur = s.step.duration_h;
        price_energy += s.result.clearing_price * s.result.demand_mw * dur;
        demand_mwh += s.result.demand_mw * dur;
        lost += s.result.lost_load_mw * dur;
        for (pid, mw) in &s.result.accepted {
            let Some(&(gi, plant)) = owner.get(pid.as_str()) else {
                continue;
            };
            let mwh = mw * dur;
            let acc = &mut accounts[gi];
            acc.market_income += mwh * s.result.clearing_price;
            acc.variable_costs += mwh * marginal_costs.get(pid).copied().unwrap_or(0.0);
            if plant.technology == Technology::Nuclear {
                acc.subsidy_income += mwh * nuclear_subsidy;
            }
            let t = techs.entry(plant.technology).or_default();
            t.mwh += mwh;
            t.tco2 += mwh * plant.emission_factor();
        }
    }
    drop(owner);

    let index: HashMap<&str, usize> = gencos.iter().enumerate().map(|(i, g)| (g.name.as_str(), i)).collect();
    for loan in loans.iter().filter(|l| l.due(year)) {
        if let Some(&gi) = index.get(loan.genco.as_str()) {
            accounts[gi].loan_payments += loan.yearly_payment;
        }
    }
    drop(index);

    let mut ledger = YearLedger {
        year,
        technologies: techs,
        average_price: if demand_mwh > 0.0 {
            price_energy / demand_mwh
        } else {
            0.0
        },
        demand_mwh,
        lost_load_mwh: lost,
        ..Default::default()
    };
    for (g, mut acc) in gencos.iter_mut().zip(accounts) {
        acc.fixed_costs = g
            .plants
            .iter()
            .filter(|p| p.is_operating(year))
            .map(|p| p.fixed_om * p.capacity_mw)
            .sum();
        g.cash += acc.net();
        acc.cash_after = g.cash;
        acc.negative_cash = g.cash < 0.0;
        ledger.gencos.insert(g.name.clone(), acc);
    }
    ledger
}

/// Yearly carbon intensity as an index against `base_intensity` (= 100).
pub fn relative_carbon_intensity(ledger: &YearLedger, base_intensity: f64) -> Result<f64> {
    if !(base_intensity > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "base carbon intensity must be > 0, got {base_intensity}"
        )));
    }
    Ok(ledger.carbon_intensity() / base_intensity * 100.0)
}
