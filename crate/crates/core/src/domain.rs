//! Market entities: fuels, plants, generation companies and carbon tax schedules.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generation technology of a plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    Ccgt,
    Coal,
    Nuclear,
    OnshoreWind,
    OffshoreWind,
    SolarPv,
    RecipGas,
    Hydro,
    Other,
}

impl Technology {
    pub const ALL: [Technology; 9] = [
        Technology::Ccgt,
        Technology::Coal,
        Technology::Nuclear,
        Technology::OnshoreWind,
        Technology::OffshoreWind,
        Technology::SolarPv,
        Technology::RecipGas,
        Technology::Hydro,
        Technology::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Technology::Ccgt => "ccgt",
            Technology::Coal => "coal",
            Technology::Nuclear => "nuclear",
            Technology::OnshoreWind => "onshore_wind",
            Technology::OffshoreWind => "offshore_wind",
            Technology::SolarPv => "solar_pv",
            Technology::RecipGas => "recip_gas",
            Technology::Hydro => "hydro",
            Technology::Other => "other",
        }
    }

    /// Which renewable capacity-factor series limits this technology, if any.
    pub fn resource(self) -> Option<Resource> {
        match self {
            Technology::OnshoreWind => Some(Resource::Onshore),
            Technology::OffshoreWind => Some(Resource::Offshore),
            Technology::SolarPv => Some(Resource::Solar),
            _ => None,
        }
    }

    /// Bucket used when comparing electricity mixes against targets.
    pub fn mix_category(self) -> Option<MixCategory> {
        match self {
            Technology::OnshoreWind | Technology::OffshoreWind => Some(MixCategory::Wind),
            Technology::Nuclear => Some(MixCategory::Nuclear),
            Technology::SolarPv => Some(MixCategory::Solar),
            Technology::Ccgt => Some(MixCategory::Ccgt),
            Technology::Coal => Some(MixCategory::Coal),
            _ => None,
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Renewable resources with hourly capacity-factor series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resource {
    Onshore,
    Offshore,
    Solar,
}

impl Resource {
    pub fn index(self) -> usize {
        match self {
            Resource::Onshore => 0,
            Resource::Offshore => 1,
            Resource::Solar => 2,
        }
    }
}

/// Technology groups used by the mix-error objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixCategory {
    Wind,
    Nuclear,
    Solar,
    Ccgt,
    Coal,
}

impl MixCategory {
    pub const ALL: [MixCategory; 5] = [
        MixCategory::Wind,
        MixCategory::Nuclear,
        MixCategory::Solar,
        MixCategory::Ccgt,
        MixCategory::Coal,
    ];
}

/// A fuel with a yearly purchase price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelType {
    pub name: String,
    /// £/MWh-thermal, indexed by simulation year offset. The last value is held beyond the end.
    #[serde(default)]
    pub price_per_mwh_thermal: Vec<f64>,
    /// tCO2 per MWh-electric; used when neither the plant nor the technology table sets one.
    #[serde(default)]
    pub emission_factor: f64,
    /// Std of the annual Gaussian purchase-price noise, £/MWh-thermal.
    #[serde(default)]
    pub price_noise_std: f64,
}

impl FuelType {
    pub fn validate(&self) -> Result<()> {
        if self.emission_factor < 0.0 || !self.emission_factor.is_finite() {
            return Err(Error::Validation(format!(
                "fuel `{}`: emission_factor must be >= 0",
                self.name
            )));
        }
        if self.price_noise_std < 0.0 || !self.price_noise_std.is_finite() {
            return Err(Error::Validation(format!(
                "fuel `{}`: price_noise_std must be >= 0",
                self.name
            )));
        }
        if let Some(p) = self.price_per_mwh_thermal.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Validation(format!(
                "fuel `{}`: price {p} must be finite and >= 0",
                self.name
            )));
        }
        Ok(())
    }

    pub fn price(&self, year_offset: usize) -> f64 {
        hold_last(&self.price_per_mwh_thermal, year_offset)
    }
}

pub(crate) fn hold_last(series: &[f64], idx: usize) -> f64 {
    match series.len() {
        0 => 0.0,
        n => series[idx.min(n - 1)],
    }
}

/// A single generator. Field order matches the plant CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPlant {
    pub id: String,
    pub technology: Technology,
    pub capacity_mw: f64,
    pub efficiency: f64,
    pub operating_period_yr: u32,
    pub predev_period_yr: u32,
    /// £/MW
    pub predev_cost: f64,
    pub construction_period_yr: u32,
    /// £/MW
    pub construction_cost: f64,
    /// £
    pub infrastructure_cost: f64,
    /// £/MW/yr
    pub fixed_om: f64,
    /// £/MWh
    pub variable_om: f64,
    pub availability: f64,
    pub fuel: String,
    pub commission_year: i32,
    pub is_intermittent: bool,
    /// tCO2/MWh-electric. Filled from the technology table at scenario load when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission_factor: Option<f64>,
}

impl PowerPlant {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidPlant {
            id: self.id.clone(),
            reason,
        };
        if !(self.capacity_mw > 0.0 && self.capacity_mw.is_finite()) {
            return Err(bad(format!("capacity_mw must be > 0, got {}", self.capacity_mw)));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(bad(format!("efficiency must be in (0, 1], got {}", self.efficiency)));
        }
        if !(0.0..=1.0).contains(&self.availability) {
            return Err(bad(format!(
                "availability must be in [0, 1], got {}",
                self.availability
            )));
        }
        for (name, v) in [
            ("predev_cost", self.predev_cost),
            ("construction_cost", self.construction_cost),
            ("infrastructure_cost", self.infrastructure_cost),
            ("fixed_om", self.fixed_om),
            ("variable_om", self.variable_om),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.operating_period_yr == 0 {
            return Err(bad("operating_period_yr must be >= 1".into()));
        }
        if self.is_intermittent && self.technology.resource().is_none() {
            return Err(bad(format!(
                "technology {} has no capacity-factor series but is marked intermittent",
                self.technology
            )));
        }
        if let Some(ef) = self.emission_factor {
            if !(ef >= 0.0 && ef.is_finite()) {
                return Err(bad(format!("emission_factor must be >= 0, got {ef}")));
            }
        }
        Ok(())
    }

    pub fn emission_factor(&self) -> f64 {
        self.emission_factor.unwrap_or(0.0)
    }

    /// Total capital outlay in £: pre-development and construction per MW plus infrastructure.
    pub fn capital_cost(&self) -> f64 {
        (self.predev_cost + self.construction_cost) * self.capacity_mw + self.infrastructure_cost
    }

    /// Years between the investment decision and first operation.
    pub fn lead_time_yr(&self) -> u32 {
        self.predev_period_yr + self.construction_period_yr
    }

    pub fn lifetime_yr(&self) -> u32 {
        self.lead_time_yr() + self.operating_period_yr
    }

    pub fn is_operating(&self, year: i32) -> bool {
        year >= self.commission_year && year < self.commission_year + self.operating_period_yr as i32
    }
}

/// Short-run marginal cost in £/MWh: fuel/η + emission factor · carbon price + variable O&M.
pub fn srmc(plant: &PowerPlant, fuel_price: f64, carbon_price: f64) -> Result<f64> {
    let fuel_term = if fuel_price == 0.0 {
        0.0
    } else if plant.efficiency > 0.0 {
        fuel_price / plant.efficiency
    } else {
        return Err(Error::InvalidPlant {
            id: plant.id.clone(),
            reason: "fuel-burning plant with zero efficiency".into(),
        });
    };
    Ok(fuel_term + plant.emission_factor() * carbon_price + plant.variable_om)
}

/// Scale every load segment by `1 + factor`.
pub fn apply_demand_growth(segments: &[f64], factor: f64) -> Vec<f64> {
    segments.iter().map(|s| s * (1.0 + factor)).collect()
}

/// How a GenCo prices its bids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiddingStrategy {
    #[default]
    Srmc,
    Learned,
}

fn default_wacc_mean() -> f64 {
    0.059
}
fn default_wacc_std() -> f64 {
    0.03
}
fn default_window() -> u32 {
    5
}
fn default_down_payment() -> f64 {
    0.25
}

/// A generation company.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenCo {
    pub name: String,
    pub cash: f64,
    #[serde(default)]
    pub plants: Vec<PowerPlant>,
    #[serde(default = "default_wacc_mean")]
    pub wacc_mean: f64,
    #[serde(default = "default_wacc_std")]
    pub wacc_std: f64,
    #[serde(default = "default_window")]
    pub forecast_window_yr: u32,
    #[serde(default = "default_down_payment")]
    pub down_payment_fraction: f64,
    #[serde(default)]
    pub strategy: BiddingStrategy,
}

impl GenCo {
    pub fn new(name: impl Into<String>, cash: f64) -> Self {
        GenCo {
            name: name.into(),
            cash,
            plants: Vec::new(),
            wacc_mean: default_wacc_mean(),
            wacc_std: default_wacc_std(),
            forecast_window_yr: default_window(),
            down_payment_fraction: default_down_payment(),
            strategy: BiddingStrategy::Srmc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.down_payment_fraction) {
            return Err(Error::Validation(format!(
                "genco `{}`: down_payment_fraction must be in [0, 1]",
                self.name
            )));
        }
        if !(self.wacc_std >= 0.0) {
            return Err(Error::Validation(format!(
                "genco `{}`: wacc_std must be >= 0",
                self.name
            )));
        }
        self.plants.iter().try_for_each(PowerPlant::validate)
    }

    pub fn capacity_mw(&self) -> f64 {
        self.plants.iter().map(|p| p.capacity_mw).sum()
    }
}

/// Yearly carbon tax in £/tCO2, indexed by simulation year offset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CarbonTaxSchedule {
    pub prices: Vec<f64>,
}

impl CarbonTaxSchedule {
    pub const DEFAULT_BOUNDS: (f64, f64) = (0.0, 250.0);

    pub fn new(prices: Vec<f64>) -> Self {
        CarbonTaxSchedule { prices }
    }

    pub fn validate(&self, bounds: (f64, f64)) -> Result<()> {
        match self.prices.iter().find(|p| !(**p >= bounds.0 && **p <= bounds.1)) {
            Some(p) => Err(Error::Validation(format!(
                "carbon price {p} outside [{}, {}]",
                bounds.0, bounds.1
            ))),
            None => Ok(()),
        }
    }

    pub fn price(&self, year_offset: usize) -> f64 {
        hold_last(&self.prices, year_offset)
    }
}

/// Emission factors per technology, tCO2/MWh-electric. Configuration, not measured data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmissionTable(pub BTreeMap<Technology, f64>);

impl Default for EmissionTable {
    fn default() -> Self {
        EmissionTable(BTreeMap::from([
            (Technology::Coal, 0.9),
            (Technology::Ccgt, 0.35),
            (Technology::RecipGas, 0.5),
        ]))
    }
}

impl EmissionTable {
    pub fn get(&self, tech: Technology) -> Option<f64> {
        self.0.get(&tech).copied()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::plant;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn srmc_gas_example() {
        let mut p = plant("g", Technology::Ccgt, 100.0);
        p.efficiency = 0.5;
        p.emission_factor = Some(0.35);
        p.variable_om = 3.0;
        let v = srmc(&p, 20.0, 25.0).unwrap();
        assert!((v - 51.75).abs() < 1e-12);
    }

    #[test]
    fn srmc_wind_is_zero() {
        let p = plant("w", Technology::OnshoreWind, 10.0);
        assert_eq!(srmc(&p, 0.0, 80.0).unwrap(), 0.0);
    }

    #[test]
    fn srmc_coal_without_tax() {
        let mut p = plant("c", Technology::Coal, 100.0);
        p.efficiency = 0.36;
        p.emission_factor = Some(0.9);
        p.variable_om = 2.0;
        assert!((srmc(&p, 9.0, 0.0).unwrap() - 27.0).abs() < 1e-12);
    }

    #[test]
    fn srmc_zero_efficiency_fuel_plant_fails() {
        let mut p = plant("c", Technology::Coal, 100.0);
        p.efficiency = 0.0;
        assert!(matches!(srmc(&p, 9.0, 0.0), Err(Error::InvalidPlant { .. })));
    }

    #[test]
    fn demand_growth_examples() {
        let out = apply_demand_growth(&[100.0, 80.0, 60.0], -0.01);
        for (a, b) in out.iter().zip([99.0, 79.2, 59.4]) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(apply_demand_growth(&[3.0, 4.0], 0.0), vec![3.0, 4.0]);
        assert!((apply_demand_growth(&[50.0], 0.025)[0] - 51.25).abs() < 1e-12);
    }

    #[test]
    fn plant_validation_rejects_bad_values() {
        let mut p = plant("x", Technology::Ccgt, 0.0);
        assert!(p.validate().is_err());
        p.capacity_mw = 10.0;
        p.availability = 1.5;
        assert!(p.validate().is_err());
        p.availability = 0.9;
        p.is_intermittent = true;
        assert!(p.validate().is_err());
        p.is_intermittent = false;
        p.variable_om = -1.0;
        assert!(p.validate().is_err());
        p.variable_om = 1.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn operating_window() {
        let mut p = plant("x", Technology::Ccgt, 10.0);
        p.commission_year = 2020;
        p.operating_period_yr = 2;
        assert!(!p.is_operating(2019));
        assert!(p.is_operating(2020));
        assert!(p.is_operating(2021));
        assert!(!p.is_operating(2022));
    }

    proptest! {
        #[test]
        fn srmc_monotone(
            fuel in 0.0f64..100.0, dfuel in 0.0f64..50.0,
            tax in 0.0f64..250.0, dtax in 0.0f64..50.0,
            vom in 0.0f64..20.0, dvom in 0.0f64..10.0,
            eta in 0.2f64..1.0, ef in 0.0f64..1.2,
        ) {
            let mut p = plant("p", Technology::Ccgt, 10.0);
            p.efficiency = eta;
            p.emission_factor = Some(ef);
            p.variable_om = vom;
            let base = srmc(&p, fuel, tax).unwrap();
            prop_assert!(base >= 0.0);
            prop_assert!(srmc(&p, fuel + dfuel, tax).unwrap() >= base);
            prop_assert!(srmc(&p, fuel, tax + dtax).unwrap() >= base);
            p.variable_om = vom + dvom;
            prop_assert!(srmc(&p, fuel, tax).unwrap() >= base);
        }

        #[test]
        fn demand_growth_composes(g in -0.05f64..0.05, n in 1usize..30, level in 1.0f64..1e5) {
            let mut seg = vec![level];
            for _ in 0..n {
                seg = apply_demand_growth(&seg, g);
            }
            let once = apply_demand_growth(&[level], (1.0 + g).powi(n as i32) - 1.0);
            prop_assert!(((seg[0] - once[0]) / once[0]).abs() < 1e-9);
        }
    }
}
