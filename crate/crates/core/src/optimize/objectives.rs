//! Objective functions scoring a finished simulation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::MixCategory;
use crate::error::{Error, Result};
use crate::market::YearLedger;
use crate::sim::SimulationResult;

/// Percentage share of generation per mix category.
pub type MixShares = BTreeMap<MixCategory, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixErrorMode {
    #[default]
    FinalYear,
    Summed,
}

/// Shares of the tracked categories in one year. Technologies outside them still count towards
/// total generation.
pub fn mix_shares(ledger: &YearLedger) -> MixShares {
    let mut out: MixShares = MixCategory::ALL.iter().map(|c| (*c, 0.0)).collect();
    for (tech, share) in ledger.shares() {
        if let Some(cat) = tech.mix_category() {
            *out.get_mut(&cat).expect("every category present") += share;
        }
    }
    out
}

/// One year's category shares as a flat row, the format of calibration targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixShareRow {
    pub year: i32,
    pub wind: f64,
    pub nuclear: f64,
    pub solar: f64,
    pub ccgt: f64,
    pub coal: f64,
}

impl MixShareRow {
    pub fn from_ledger(ledger: &YearLedger) -> Self {
        let s = mix_shares(ledger);
        MixShareRow {
            year: ledger.year,
            wind: s[&MixCategory::Wind],
            nuclear: s[&MixCategory::Nuclear],
            solar: s[&MixCategory::Solar],
            ccgt: s[&MixCategory::Ccgt],
            coal: s[&MixCategory::Coal],
        }
    }

    pub fn shares(&self) -> MixShares {
        MixShares::from([
            (MixCategory::Wind, self.wind),
            (MixCategory::Nuclear, self.nuclear),
            (MixCategory::Solar, self.solar),
            (MixCategory::Ccgt, self.ccgt),
            (MixCategory::Coal, self.coal),
        ])
    }
}

/// Target shares keyed by year.
pub fn target_from_rows(rows: &[MixShareRow]) -> BTreeMap<i32, MixShares> {
    rows.iter().map(|r| (r.year, r.shares())).collect()
}

fn year_error(sim: &MixShares, target: &MixShares) -> Result<f64> {
    let mut total = 0.0;
    for cat in MixCategory::ALL {
        let want = target
            .get(&cat)
            .ok_or_else(|| Error::InvalidTarget(format!("target mix has no share for {cat:?}")))?;
        total += (sim.get(&cat).copied().unwrap_or(0.0) - want).abs();
    }
    Ok(total / MixCategory::ALL.len() as f64)
}

/// Mean absolute share error over the mix categories, in percentage points.
///
/// `target` maps years to shares. `FinalYear` compares the last simulated year (which must have
/// a target); `Summed` adds the yearly errors over every target year.
pub fn objective_mix_error(
    ledgers: &[YearLedger],
    target: &BTreeMap<i32, MixShares>,
    mode: MixErrorMode,
) -> Result<f64> {
    let find = |year: i32| {
        ledgers
            .iter()
            .find(|l| l.year == year)
            .ok_or_else(|| Error::InvalidTarget(format!("no simulated year {year}")))
    };
    match mode {
        MixErrorMode::FinalYear => {
            let last = ledgers
                .last()
                .ok_or_else(|| Error::InvalidState("simulation produced no years".into()))?;
            let want = target
                .get(&last.year)
                .ok_or_else(|| Error::InvalidTarget(format!("no target for final year {}", last.year)))?;
            year_error(&mix_shares(last), want)
        }
        MixErrorMode::Summed => {
            let mut sum = 0.0;
            for (year, want) in target {
                sum += year_error(&mix_shares(find(*year)?), want)?;
            }
            Ok(sum)
        }
    }
}

/// Final-year demand-weighted average price and relative carbon intensity, both minimised.
pub fn objective_carbon(result: &SimulationResult) -> Result<(f64, f64)> {
    let last = result
        .final_ledger()
        .ok_or_else(|| Error::InvalidState("simulation produced no years".into()))?;
    Ok((last.average_price, result.relative_carbon_intensity(last)?))
}
