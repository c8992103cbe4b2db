use std::path::PathBuf;

use anyhow::{bail, Context};
use elecmarket::output::{write_atomic, CsvRow};
use elecmarket::temporal::{
    evaluate_approximation, representative_year, ClusterMethod, DailySeriesMatrix, RepresentativeMode,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::RunContext;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Daily series CSV; the scenario's series when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Cluster counts to try.
    #[arg(long, value_delimiter = ',', default_value = "1,4,8,16")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "kmeans")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "medoid")]
    pub representative: Representative,
    /// k-means restarts; the best inertia wins.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Method {
    Kmeans,
    Ward,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Representative {
    Medoid,
    Centroid,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClusterMetricsRow {
    pub k: usize,
    pub method: String,
    pub total_hours: f64,
    pub ree_av: f64,
    pub nrmse_av: f64,
    pub ce_av: f64,
}

impl CsvRow for ClusterMetricsRow {
    const HEADER: &'static [&'static str] = &["k", "method", "total_hours", "ree_av", "nrmse_av", "ce_av"];
}

pub fn run(ctx: &mut RunContext, args: &Args) -> anyhow::Result<()> {
    let data = match &args.input {
        Some(p) => DailySeriesMatrix::from_csv_path(p).with_context(|| format!("reading {}", p.display()))?,
        None if ctx.config.is_some() => ctx.load_scenario()?.series,
        None => bail!("cluster-days needs --input or --config"),
    };
    if args.k.is_empty() {
        bail!("--k needs at least one cluster count");
    }
    let seed = ctx.seed(None);
    let method = match args.method {
        Method::Kmeans => ClusterMethod::Kmeans,
        Method::Ward => ClusterMethod::Ward,
    };
    let mode = match args.representative {
        Representative::Medoid => RepresentativeMode::Medoid,
        Representative::Centroid => RepresentativeMode::Centroid,
    };
    let out = ctx.out.clone();
    let results: Vec<(PathBuf, ClusterMetricsRow)> = args
        .k
        .par_iter()
        .map(|&k| {
            let year = representative_year(&data, k, method, mode, args.restarts, seed)
                .with_context(|| format!("clustering with k = {k}"))?;
            let m = evaluate_approximation(&data, &year)?;
            let path = out.join(format!("representative_year_k{k}.csv"));
            write_atomic(&path, |w| year.to_csv_writer(w))?;
            Ok((
                path,
                ClusterMetricsRow {
                    k,
                    method: method.as_str().to_string(),
                    total_hours: year.total_hours(),
                    ree_av: m.ree_av,
                    nrmse_av: m.nrmse_av,
                    ce_av: m.ce_av,
                },
            ))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut rows = Vec::with_capacity(results.len());
    for (path, row) in results {
        log::info!("k = {}: nrmse_av {:.4}, ce_av {:.4}", row.k, row.nrmse_av, row.ce_av);
        ctx.record(path);
        rows.push(row);
    }
    ctx.write_csv("cluster_metrics.csv", &rows)
}
