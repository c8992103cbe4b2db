use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use elecmarket::metrics::{mape, mase, rmse, ForecastEvalSeries};
use elecmarket::output::CsvRow;
use serde::{Deserialize, Serialize};

use crate::context::RunContext;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// CSV with `actual` and `predicted` columns.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV whose `value` column is the training history for MASE.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct ForecastRow {
    actual: f64,
    predicted: f64,
}

#[derive(Debug, Deserialize)]
struct HistoryRow {
    value: f64,
}

/// A metric value, or empty with the reason it is undefined.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub value: Option<f64>,
    pub note: String,
}

impl CsvRow for MetricRow {
    const HEADER: &'static [&'static str] = &["metric", "value", "note"];
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .map(|row| row.with_context(|| format!("reading {}", path.display())))
        .collect()
}

fn row(metric: &str, value: elecmarket::Result<f64>) -> anyhow::Result<MetricRow> {
    match value {
        Ok(v) => Ok(MetricRow {
            metric: metric.into(),
            value: Some(v),
            note: String::new(),
        }),
        Err(elecmarket::Error::MetricUndefined(why)) => Ok(MetricRow {
            metric: metric.into(),
            value: None,
            note: why,
        }),
        Err(e) => Err(e.into()),
    }
}

pub fn run(ctx: &mut RunContext, args: &Args) -> anyhow::Result<()> {
    ctx.seed(None);
    let forecast: Vec<ForecastRow> = read_rows(&args.input)?;
    if forecast.is_empty() {
        bail!("{} has no rows", args.input.display());
    }
    let history = match &args.history {
        Some(p) => read_rows::<HistoryRow>(p)?.into_iter().map(|h| h.value).collect(),
        None => Vec::new(),
    };
    let series = ForecastEvalSeries::new(
        forecast.iter().map(|r| r.actual).collect(),
        forecast.iter().map(|r| r.predicted).collect(),
        history,
    )?;
    let rows = vec![
        row("mape", mape(&series))?,
        row("rmse", rmse(&series))?,
        row("mase", mase(&series))?,
    ];
    for r in &rows {
        match r.value {
            Some(v) => println!("{}\t{v}", r.metric),
            None => println!("{}\tundefined: {}", r.metric, r.note),
        }
    }
    ctx.write_csv("forecast_metrics.csv", &rows)
}
