//! Scenario files: a TOML document describing the market, its agents and the run settings.
//!
//! ```toml
//! name = "toy"
//! start_year = 2018
//! horizon_yr = 3
//! demand_growth_per_yr = 0.0
//! lost_load_price = 6000.0
//! carbon_prices = [18.0]
//!
//! [temporal]
//! mode = "representative_days"
//! k = 8
//!
//! [price_curve]
//! mode = "exogenous"
//! m = 0.001
//! c = 20.0
//!
//! [timeseries]
//! synthetic = { archetypes = 4, days = 365, seed = 1 }
//!
//! [[fuels]]
//! name = "gas"
//! price_per_mwh_thermal = [20.0]
//!
//! [[gencos]]
//! name = "alpha"
//! cash = 1e9
//! plants_csv = "alpha_plants.csv"
//! ```

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{srmc, BiddingStrategy, CarbonTaxSchedule, EmissionTable, FuelType, GenCo, PowerPlant};
use crate::error::{Error, Result};
use crate::stochastic::{FittedDistribution, DEFAULT_UNIFORM_HIGH, DEFAULT_UNIFORM_LOW};
use crate::synthetic::archetype_year;
use crate::temporal::{DailySeriesMatrix, TemporalMode};

/// Fuel name for plants that burn nothing.
pub const NO_FUEL: &str = "none";

fn default_name() -> String {
    "scenario".into()
}
fn default_lost_load_price() -> f64 {
    6000.0
}
fn default_true() -> bool {
    true
}
fn default_nuclear_wacc() -> f64 {
    0.10
}
fn default_carbon_bounds() -> (f64, f64) {
    CarbonTaxSchedule::DEFAULT_BOUNDS
}
fn default_lookahead() -> u32 {
    10
}

/// Where GenCos get their expected price curve from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriceCurveConfig {
    /// A given line `price = m · demand + c`, optionally per simulated year, perturbed per GenCo.
    Exogenous {
        m: f64,
        c: f64,
        #[serde(default)]
        per_year: Vec<(f64, f64)>,
        #[serde(default)]
        sigma_m: f64,
        #[serde(default)]
        sigma_c: f64,
    },
    /// Fitted to a simulated market `lookahead_yr` years ahead.
    Endogenous {
        #[serde(default = "default_lookahead")]
        lookahead_yr: u32,
    },
}

impl Default for PriceCurveConfig {
    fn default() -> Self {
        PriceCurveConfig::Endogenous {
            lookahead_yr: default_lookahead(),
        }
    }
}

/// Which quantities are sampled rather than fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StochasticConfig {
    /// Discount rate drawn per GenCo decision from its WACC distribution.
    pub wacc: bool,
    /// Variable O&M of every plant scaled by a uniform multiplier.
    pub variable_om: bool,
    pub variable_om_low: f64,
    pub variable_om_high: f64,
    /// Yearly Gaussian noise on each GenCo's fuel purchase price.
    pub fuel_noise: bool,
    /// Residual distribution added to demand in every period.
    pub demand_residual: Option<FittedDistribution>,
}

impl Default for StochasticConfig {
    fn default() -> Self {
        StochasticConfig {
            wacc: false,
            variable_om: false,
            variable_om_low: DEFAULT_UNIFORM_LOW,
            variable_om_high: DEFAULT_UNIFORM_HIGH,
            fuel_noise: false,
            demand_residual: None,
        }
    }
}

impl StochasticConfig {
    pub fn all_enabled() -> Self {
        StochasticConfig {
            wacc: true,
            variable_om: true,
            fuel_noise: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub archetypes: usize,
    pub days: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Demand and capacity-factor source: a CSV file or the built-in synthetic generator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeseriesSource {
    pub csv: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenCoConfig {
    pub name: String,
    pub cash: f64,
    #[serde(default)]
    pub plants: Vec<PowerPlant>,
    /// Extra plants read from a CSV file, relative to the scenario file.
    #[serde(default)]
    pub plants_csv: Option<PathBuf>,
    #[serde(default)]
    pub wacc_mean: Option<f64>,
    #[serde(default)]
    pub wacc_std: Option<f64>,
    #[serde(default)]
    pub forecast_window_yr: Option<u32>,
    #[serde(default)]
    pub down_payment_fraction: Option<f64>,
    #[serde(default)]
    pub strategy: BiddingStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub start_year: i32,
    pub horizon_yr: u32,
    #[serde(default)]
    pub demand_growth_per_yr: f64,
    /// £/MWh paid to nuclear output on top of the market price.
    #[serde(default)]
    pub nuclear_subsidy: f64,
    #[serde(default = "default_lost_load_price")]
    pub lost_load_price: f64,
    #[serde(default)]
    pub market_cap: Option<f64>,
    /// Run seed; drawn at random by the CLI when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Seed of the day clustering, kept apart from the run seed so that sampling is the only
    /// thing a run seed changes.
    #[serde(default)]
    pub cluster_seed: u64,
    #[serde(default)]
    pub temporal: TemporalMode,
    /// tCO2/MWh that relative carbon intensity is indexed against; the first simulated year
    /// when absent.
    #[serde(default)]
    pub base_carbon_intensity: Option<f64>,
    #[serde(default = "default_nuclear_wacc")]
    pub nuclear_wacc: f64,
    #[serde(default = "default_true")]
    pub investment: bool,
    #[serde(default)]
    pub price_curve: PriceCurveConfig,
    #[serde(default)]
    pub stochastic: StochasticConfig,
    pub timeseries: TimeseriesSource,
    pub fuels: Vec<FuelType>,
    /// £/tCO2 per simulated year; the last value holds afterwards.
    #[serde(default)]
    pub carbon_prices: Vec<f64>,
    #[serde(default = "default_carbon_bounds")]
    pub carbon_bounds: (f64, f64),
    #[serde(default)]
    pub emission_factors: EmissionTable,
    /// Technology menu GenCos may invest in.
    #[serde(default)]
    pub candidates: Vec<PowerPlant>,
    pub gencos: Vec<GenCoConfig>,
}

/// A loaded, validated scenario with plants resolved and the time series in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub gencos: Vec<GenCo>,
    pub candidates: Vec<PowerPlant>,
    pub series: DailySeriesMatrix,
}

impl Scenario {
    /// Read a scenario file, apply `KEY=VALUE` overrides (dotted TOML paths) and validate.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::from_toml_str(&text, overrides, base)
    }

    /// Parse scenario text; relative file references are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text)?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let config: ScenarioConfig = doc.try_into()?;
        Scenario::from_config(config, base_dir)
    }

    pub fn from_config(mut config: ScenarioConfig, base_dir: &Path) -> Result<Self> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let mut gencos = Vec::with_capacity(config.gencos.len());
        for g in &mut config.gencos {
            let mut plants = g.plants.clone();
            if let Some(csv) = &g.plants_csv {
                let full = resolve(csv);
                plants.extend(read_plants_csv(&full)?);
                g.plants_csv = Some(full);
            }
            let mut genco = GenCo::new(g.name.clone(), g.cash);
            genco.plants = plants;
            genco.wacc_mean = g.wacc_mean.unwrap_or(genco.wacc_mean);
            genco.wacc_std = g.wacc_std.unwrap_or(genco.wacc_std);
            genco.forecast_window_yr = g.forecast_window_yr.unwrap_or(genco.forecast_window_yr);
            genco.down_payment_fraction = g.down_payment_fraction.unwrap_or(genco.down_payment_fraction);
            genco.strategy = g.strategy;
            gencos.push(genco);
        }
        let series = match (&config.timeseries.csv, &config.timeseries.synthetic) {
            (Some(csv), None) => {
                let full = resolve(csv);
                let s = DailySeriesMatrix::from_csv_path(&full)?;
                config.timeseries.csv = Some(full);
                s
            }
            (None, Some(spec)) => archetype_year(spec.archetypes, spec.days, spec.seed),
            _ => {
                return Err(Error::Validation(
                    "timeseries: give exactly one of `csv` or `synthetic`".into(),
                ))
            }
        };
        let mut scenario = Scenario {
            candidates: config.candidates.clone(),
            config,
            gencos,
            series,
        };
        scenario.validate()?;
        scenario.resolve_emission_factors();
        Ok(scenario)
    }

    fn fuel(&self, name: &str) -> Option<&FuelType> {
        self.config.fuels.iter().find(|f| f.name == name)
    }

    fn resolve_emission_factors(&mut self) {
        let table = self.config.emission_factors.clone();
        let fuels: HashMap<String, f64> = self
            .config
            .fuels
            .iter()
            .map(|f| (f.name.clone(), f.emission_factor))
            .collect();
        let fill = |p: &mut PowerPlant| {
            if p.emission_factor.is_none() {
                let ef = table
                    .get(p.technology)
                    .or_else(|| fuels.get(&p.fuel).copied())
                    .unwrap_or(0.0);
                p.emission_factor = Some(ef);
            }
        };
        self.gencos.iter_mut().flat_map(|g| g.plants.iter_mut()).for_each(fill);
        self.candidates.iter_mut().for_each(fill);
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        let fail = |msg: String| Err(Error::Validation(msg));
        if c.horizon_yr < 1 {
            return fail("horizon_yr must be >= 1".into());
        }
        if !(c.lost_load_price > 0.0 && c.lost_load_price.is_finite()) {
            return fail(format!("lost_load_price must be > 0, got {}", c.lost_load_price));
        }
        if let Some(cap) = c.market_cap {
            if !(cap > 0.0) {
                return fail(format!("market_cap must be > 0, got {cap}"));
            }
            if cap > c.lost_load_price {
                return fail(format!(
                    "market_cap {cap} exceeds lost_load_price {}",
                    c.lost_load_price
                ));
            }
        }
        if !(c.demand_growth_per_yr > -1.0) {
            return fail(format!(
                "demand_growth_per_yr must be > -1, got {}",
                c.demand_growth_per_yr
            ));
        }
        if !(c.nuclear_subsidy >= 0.0) {
            return fail(format!("nuclear_subsidy must be >= 0, got {}", c.nuclear_subsidy));
        }
        let mut names = BTreeSet::new();
        for f in &c.fuels {
            f.validate()?;
            if !names.insert(f.name.as_str()) {
                return fail(format!("fuel `{}` declared twice", f.name));
            }
        }
        CarbonTaxSchedule::new(c.carbon_prices.clone())
            .validate(c.carbon_bounds)
            .map_err(|e| Error::Validation(format!("carbon_prices: {e}")))?;
        if let PriceCurveConfig::Exogenous { sigma_m, sigma_c, .. } = c.price_curve {
            if !(sigma_m >= 0.0 && sigma_c >= 0.0) {
                return fail("price_curve: sigma_m and sigma_c must be >= 0".into());
            }
        }
        let s = &c.stochastic;
        if !(0.0 <= s.variable_om_low && s.variable_om_low <= s.variable_om_high) {
            return fail("stochastic: need 0 <= variable_om_low <= variable_om_high".into());
        }
        if self.gencos.is_empty() {
            return fail("at least one GenCo is required".into());
        }
        let mut genco_names = BTreeSet::new();
        let mut plant_ids = BTreeSet::new();
        for g in &self.gencos {
            g.validate()
                .map_err(|e| Error::Validation(format!("genco `{}`: {e}", g.name)))?;
            if !genco_names.insert(g.name.as_str()) {
                return fail(format!("genco `{}` declared twice", g.name));
            }
            for p in &g.plants {
                self.check_plant(p)?;
                if !plant_ids.insert(p.id.as_str()) {
                    return fail(format!("plant id `{}` used twice", p.id));
                }
                let price = self.fuel(&p.fuel).map_or(0.0, |f| f.price(0));
                let cost = srmc(p, price, c.carbon_prices.first().copied().unwrap_or(0.0))?;
                if cost >= c.lost_load_price {
                    return fail(format!(
                        "plant `{}`: marginal cost {cost:.2} is not below lost_load_price {}",
                        p.id, c.lost_load_price
                    ));
                }
            }
        }
        for p in &self.candidates {
            self.check_plant(p)?;
        }
        Ok(())
    }

    fn check_plant(&self, p: &PowerPlant) -> Result<()> {
        p.validate().map_err(|e| Error::Validation(e.to_string()))?;
        if p.fuel != NO_FUEL && self.fuel(&p.fuel).is_none() {
            return Err(Error::Validation(format!(
                "plant `{}` references unknown fuel `{}`",
                p.id, p.fuel
            )));
        }
        Ok(())
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        let start = self.config.start_year;
        start..start + self.config.horizon_yr as i32
    }

    pub fn carbon_schedule(&self) -> CarbonTaxSchedule {
        CarbonTaxSchedule::new(self.config.carbon_prices.clone())
    }
}

/// Set `path = value` in a TOML document. `value` is read as a TOML value when it parses as
/// one and as a bare string otherwise; intermediate tables are created as needed.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("override `{assignment}` is not KEY=VALUE")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::InvalidArgument(format!("override key `{path}` is malformed")));
    }
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut table = doc;
    for k in parents {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::InvalidArgument(format!("override `{path}`: `{k}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

const PLANT_COLUMNS: [&str; 16] = [
    "id",
    "technology",
    "capacity_mw",
    "efficiency",
    "operating_period_yr",
    "predev_period_yr",
    "predev_cost",
    "construction_period_yr",
    "construction_cost",
    "infrastructure_cost",
    "fixed_om",
    "variable_om",
    "availability",
    "fuel",
    "commission_year",
    "is_intermittent",
];

/// Read plants from CSV, one row per plant. The first 16 columns must be the plant fields in
/// declaration order; an optional trailing `emission_factor` column may follow.
pub fn read_plants_csv(path: &Path) -> Result<Vec<PowerPlant>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_plants(file).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

pub fn read_plants<R: std::io::Read>(reader: R) -> Result<Vec<PowerPlant>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let ok =
        names.len() >= 16 && names[..16] == PLANT_COLUMNS && (names.len() == 16 || names[16..] == ["emission_factor"]);
    if !ok {
        return Err(Error::Validation(format!(
            "plant CSV columns must be {PLANT_COLUMNS:?} (plus optional emission_factor), got {names:?}"
        )));
    }
    let mut plants = Vec::new();
    for row in rdr.deserialize() {
        let p: PowerPlant = row?;
        p.validate()?;
        plants.push(p);
    }
    Ok(plants)
}

pub fn write_plants<W: std::io::Write>(plants: &[PowerPlant], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = PLANT_COLUMNS.to_vec();
    header.push("emission_factor");
    w.write_record(&header)?;
    for p in plants {
        w.write_record([
            p.id.clone(),
            p.technology.as_str().to_string(),
            p.capacity_mw.to_string(),
            p.efficiency.to_string(),
            p.operating_period_yr.to_string(),
            p.predev_period_yr.to_string(),
            p.predev_cost.to_string(),
            p.construction_period_yr.to_string(),
            p.construction_cost.to_string(),
            p.infrastructure_cost.to_string(),
            p.fixed_om.to_string(),
            p.variable_om.to_string(),
            p.availability.to_string(),
            p.fuel.clone(),
            p.commission_year.to_string(),
            p.is_intermittent.to_string(),
            p.emission_factor.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<plants>", e))?;
    Ok(())
}
