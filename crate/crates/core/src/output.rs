//! CSV result files. Every file is written to a temporary sibling and renamed into place, so
//! readers never see a partial file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bidding::{EpisodeRecord, HistogramBin, MarketPowerReport};
use crate::error::{Error, Result};
use crate::optimize::objectives::MixShareRow;
use crate::sim::{ClearingRecord, InvestmentRecord, MixRecord, SimulationResult};

/// Write `path` through a temporary file in the same directory, then rename it over `path`.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut out = BufWriter::new(file);
        write(&mut out)?;
        let file = out.into_inner().map_err(|e| Error::io(&tmp, e.into_error()))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// A row type with a fixed header, so empty tables still get one.
pub trait CsvRow: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

pub fn write_rows<W: Write, T: CsvRow>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv<T: CsvRow>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, |w| write_rows(w, rows))
}

pub fn read_csv<T: CsvRow>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != T::HEADER {
        return Err(Error::Validation(format!(
            "{}: expected columns {:?}, found {:?}",
            path.display(),
            T::HEADER,
            header
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

impl CsvRow for ClearingRecord {
    const HEADER: &'static [&'static str] = &["year", "step", "demand_mw", "clearing_price", "lost_load_mw"];
}

impl CsvRow for InvestmentRecord {
    const HEADER: &'static [&'static str] = &[
        "year",
        "genco",
        "technology",
        "capacity_mw",
        "npv_per_mw",
        "commissioning_year",
    ];
}

impl CsvRow for MixRecord {
    const HEADER: &'static [&'static str] = &["year", "technology", "mwh", "share", "tco2"];
}

impl CsvRow for MixShareRow {
    const HEADER: &'static [&'static str] = &["year", "wind", "nuclear", "solar", "ccgt", "coal"];
}

impl CsvRow for EpisodeRecord {
    const HEADER: &'static [&'static str] = &["episode", "mean_reward", "avg_price", "baseline_price"];
}

impl CsvRow for HistogramBin {
    const HEADER: &'static [&'static str] = &["price_bin", "count"];
}

/// System-wide totals for one simulated year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSummary {
    pub year: i32,
    pub average_price: f64,
    pub demand_mwh: f64,
    pub lost_load_mwh: f64,
    pub generation_mwh: f64,
    pub emissions_tco2: f64,
    pub carbon_intensity: f64,
    pub relative_carbon_intensity: f64,
}

impl CsvRow for YearSummary {
    const HEADER: &'static [&'static str] = &[
        "year",
        "average_price",
        "demand_mwh",
        "lost_load_mwh",
        "generation_mwh",
        "emissions_tco2",
        "carbon_intensity",
        "relative_carbon_intensity",
    ];
}

/// One GenCo's accounts for one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GencoYearRecord {
    pub year: i32,
    pub genco: String,
    pub market_income: f64,
    pub subsidy_income: f64,
    pub variable_costs: f64,
    pub fixed_costs: f64,
    pub loan_payments: f64,
    pub cash_after: f64,
    pub negative_cash: bool,
}

impl CsvRow for GencoYearRecord {
    const HEADER: &'static [&'static str] = &[
        "year",
        "genco",
        "market_income",
        "subsidy_income",
        "variable_costs",
        "fixed_costs",
        "loan_payments",
        "cash_after",
        "negative_cash",
    ];
}

/// Plot-ready price duration curve: hours at or above each price, per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDurationPoint {
    pub year: i32,
    pub hours: f64,
    pub price: f64,
}

impl CsvRow for PriceDurationPoint {
    const HEADER: &'static [&'static str] = &["year", "hours", "price"];
}

pub fn year_summaries(result: &SimulationResult) -> Result<Vec<YearSummary>> {
    result
        .ledgers
        .iter()
        .map(|l| {
            Ok(YearSummary {
                year: l.year,
                average_price: l.average_price,
                demand_mwh: l.demand_mwh,
                lost_load_mwh: l.lost_load_mwh,
                generation_mwh: l.generation_mwh(),
                emissions_tco2: l.emissions_tco2(),
                carbon_intensity: l.carbon_intensity(),
                relative_carbon_intensity: result.relative_carbon_intensity(l)?,
            })
        })
        .collect()
}

pub fn genco_records(result: &SimulationResult) -> Vec<GencoYearRecord> {
    result
        .ledgers
        .iter()
        .flat_map(|l| {
            l.gencos.iter().map(move |(name, a)| GencoYearRecord {
                year: l.year,
                genco: name.clone(),
                market_income: a.market_income,
                subsidy_income: a.subsidy_income,
                variable_costs: a.variable_costs,
                fixed_costs: a.fixed_costs,
                loan_payments: a.loan_payments,
                cash_after: a.cash_after,
                negative_cash: a.negative_cash,
            })
        })
        .collect()
}

/// Clearing prices of each year sorted high to low against cumulative hours.
pub fn price_duration(result: &SimulationResult, durations: &[f64]) -> Vec<PriceDurationPoint> {
    let mut out = Vec::new();
    let years: Vec<i32> = result.ledgers.iter().map(|l| l.year).collect();
    for year in years {
        let mut pts: Vec<(f64, f64)> = result
            .clearing
            .iter()
            .filter(|c| c.year == year)
            .map(|c| (c.clearing_price, durations.get(c.step).copied().unwrap_or(0.0)))
            .collect();
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut hours = 0.0;
        for (price, d) in pts {
            hours += d;
            out.push(PriceDurationPoint { year, hours, price });
        }
    }
    out
}

/// Write the full set of simulation tables into `dir`; returns the files written.
pub fn write_simulation(dir: &Path, result: &SimulationResult, durations: &[f64]) -> Result<Vec<PathBuf>> {
    let files = [
        "years.csv",
        "mix.csv",
        "mix_shares.csv",
        "clearing.csv",
        "investments.csv",
        "gencos.csv",
        "price_duration.csv",
    ]
    .map(|f| dir.join(f));
    write_csv(&files[0], &year_summaries(result)?)?;
    write_csv(&files[1], &result.mix())?;
    let shares: Vec<MixShareRow> = result.ledgers.iter().map(MixShareRow::from_ledger).collect();
    write_csv(&files[2], &shares)?;
    write_csv(&files[3], &result.clearing)?;
    write_csv(&files[4], &result.investments)?;
    write_csv(&files[5], &genco_records(result))?;
    write_csv(&files[6], &price_duration(result, durations))?;
    Ok(files.to_vec())
}

/// Episode table and final bid histogram of a market-power run.
pub fn write_market_power(dir: &Path, report: &MarketPowerReport) -> Result<Vec<PathBuf>> {
    let files = [dir.join("episodes.csv"), dir.join("bid_histogram.csv")];
    write_csv(&files[0], &report.episodes)?;
    write_csv(&files[1], &report.histogram)?;
    Ok(files.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Technology;

    fn auto_header<T: CsvRow>(row: &T) -> Vec<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        text.lines().next().unwrap().split(',').map(str::to_string).collect()
    }

    #[test]
    fn headers_match_field_order() {
        assert_eq!(
            auto_header(&ClearingRecord {
                year: 1,
                step: 0,
                demand_mw: 1.0,
                clearing_price: 2.0,
                lost_load_mw: 0.0
            }),
            ClearingRecord::HEADER
        );
        assert_eq!(
            auto_header(&InvestmentRecord {
                year: 1,
                genco: "a".into(),
                technology: Technology::Ccgt,
                capacity_mw: 1.0,
                npv_per_mw: 2.0,
                commissioning_year: 3
            }),
            InvestmentRecord::HEADER
        );
        assert_eq!(
            auto_header(&MixRecord {
                year: 1,
                technology: Technology::Coal,
                mwh: 1.0,
                share: 2.0,
                tco2: 3.0
            }),
            MixRecord::HEADER
        );
        assert_eq!(
            auto_header(&EpisodeRecord {
                episode: 0,
                mean_reward: 1.0,
                avg_price: 2.0,
                baseline_price: 3.0
            }),
            EpisodeRecord::HEADER
        );
        assert_eq!(
            auto_header(&MixShareRow {
                year: 1,
                wind: 0.0,
                nuclear: 0.0,
                solar: 0.0,
                ccgt: 0.0,
                coal: 0.0
            }),
            MixShareRow::HEADER
        );
        assert_eq!(
            auto_header(&HistogramBin {
                price_bin: 0.0,
                count: 1
            }),
            HistogramBin::HEADER
        );
        assert_eq!(
            auto_header(&YearSummary {
                year: 1,
                average_price: 0.0,
                demand_mwh: 0.0,
                lost_load_mwh: 0.0,
                generation_mwh: 0.0,
                emissions_tco2: 0.0,
                carbon_intensity: 0.0,
                relative_carbon_intensity: 0.0
            }),
            YearSummary::HEADER
        );
        assert_eq!(
            auto_header(&GencoYearRecord {
                year: 1,
                genco: "a".into(),
                market_income: 0.0,
                subsidy_income: 0.0,
                variable_costs: 0.0,
                fixed_costs: 0.0,
                loan_payments: 0.0,
                cash_after: 0.0,
                negative_cash: false
            }),
            GencoYearRecord::HEADER
        );
        assert_eq!(
            auto_header(&PriceDurationPoint {
                year: 1,
                hours: 0.0,
                price: 0.0
            }),
            PriceDurationPoint::HEADER
        );
    }

    #[test]
    fn atomic_write_round_trips_and_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/clearing.csv");
        let rows = vec![
            ClearingRecord {
                year: 2020,
                step: 3,
                demand_mw: 0.1 + 0.2,
                clearing_price: 1.0 / 3.0,
                lost_load_mw: 1e-300,
            },
            ClearingRecord {
                year: 2021,
                step: 0,
                demand_mw: 12345.678901234567,
                clearing_price: -0.0,
                lost_load_mw: 6000.0,
            },
        ];
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv::<ClearingRecord>(&path).unwrap(), rows);
        let names: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn empty_table_keeps_its_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("investments.csv");
        write_csv::<InvestmentRecord>(&path, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim(), InvestmentRecord::HEADER.join(","));
        assert!(read_csv::<InvestmentRecord>(&path).unwrap().is_empty());
    }

    #[test]
    fn failed_write_keeps_the_old_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "old").unwrap();
        let err = write_atomic(&path, |w| {
            w.write_all(b"partial").unwrap();
            Err(Error::InvalidState("boom".into()))
        });
        assert!(err.is_err());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "old");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
