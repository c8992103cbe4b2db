//! Duration curves and the three measures of how well an approximated year matches the
//! observed one: relative energy error, normalised RMSE of duration curves, and correlation
//! error between series pairs.

use super::{DailySeriesMatrix, RepresentativeYear, KINDS};
use crate::error::{Error, Result};

/// Number of evenly spaced duration quantiles both curves are sampled on before comparing.
pub const NRMSE_GRID_POINTS: usize = 1000;

/// Values sorted high to low, each with the number of hours it lasts.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationCurve {
    pub values: Vec<f64>,
    pub hour_weights: Vec<f64>,
}

impl DurationCurve {
    pub fn total_duration(&self) -> f64 {
        self.hour_weights.iter().sum()
    }

    /// Duration-weighted sum of the values.
    pub fn energy(&self) -> f64 {
        self.values.iter().zip(&self.hour_weights).map(|(v, w)| v * w).sum()
    }

    fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Sample the step curve at the midpoints of `points` equal slices of its total duration.
    pub fn resample(&self, points: usize) -> Vec<f64> {
        let total = self.total_duration();
        let mut out = Vec::with_capacity(points);
        let mut idx = 0;
        let mut cum = self.hour_weights.first().copied().unwrap_or(0.0);
        for j in 0..points {
            let pos = (j as f64 + 0.5) / points as f64 * total;
            while pos >= cum && idx + 1 < self.values.len() {
                idx += 1;
                cum += self.hour_weights[idx];
            }
            out.push(self.values[idx]);
        }
        out
    }
}

/// Sort values high to low, carrying durations; equal values merge into one entry.
pub fn duration_curve(values: &[f64], durations: &[f64]) -> DurationCurve {
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(durations.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut curve = DurationCurve {
        values: Vec::with_capacity(pairs.len()),
        hour_weights: Vec::with_capacity(pairs.len()),
    };
    for (v, d) in pairs {
        if curve.values.last() == Some(&v) {
            *curve.hour_weights.last_mut().unwrap() += d;
        } else {
            curve.values.push(v);
            curve.hour_weights.push(d);
        }
    }
    curve
}

fn check_pairing(observed: usize, approx: usize) -> Result<()> {
    if observed != approx || observed == 0 {
        return Err(Error::InvalidArgument(format!(
            "need matching non-empty series sets, got {observed} observed and {approx} approximated"
        )));
    }
    Ok(())
}

/// Mean over series of |E_obs − E_approx| / E_obs, with E the duration-weighted total.
pub fn ree_av(observed: &[DurationCurve], approx: &[DurationCurve]) -> Result<f64> {
    check_pairing(observed.len(), approx.len())?;
    let mut acc = 0.0;
    for (o, a) in observed.iter().zip(approx) {
        let e = o.energy();
        if e == 0.0 {
            return Err(Error::DivisionByZero("ree_av: observed total is zero"));
        }
        acc += (e - a.energy()).abs() / e;
    }
    Ok(acc / observed.len() as f64)
}

/// Mean over series of RMSE(observed, approx) / (max − min of observed), both curves sampled
/// on the common quantile grid.
pub fn nrmse_av(observed: &[DurationCurve], approx: &[DurationCurve]) -> Result<f64> {
    check_pairing(observed.len(), approx.len())?;
    let mut acc = 0.0;
    for (o, a) in observed.iter().zip(approx) {
        let range = o.max() - o.min();
        if range == 0.0 {
            return Err(Error::DivisionByZero("nrmse_av: observed curve is constant"));
        }
        let (go, ga) = (o.resample(NRMSE_GRID_POINTS), a.resample(NRMSE_GRID_POINTS));
        let mse = go.iter().zip(&ga).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / NRMSE_GRID_POINTS as f64;
        acc += mse.sqrt() / range;
    }
    Ok(acc / observed.len() as f64)
}

/// Pearson correlation with per-observation weights.
pub fn weighted_pearson(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() != w.len() || x.is_empty() {
        return Err(Error::InvalidArgument(
            "pearson inputs differ in length or are empty".into(),
        ));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / sw;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for ((a, b), w) in x.iter().zip(y).zip(w) {
        let (da, db) = (a - mx, b - my);
        sxy += w * da * db;
        sxx += w * da * da;
        syy += w * db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn pearson(p1: &[f64], p2: &[f64]) -> Result<f64> {
    weighted_pearson(p1, p2, &vec![1.0; p1.len()])
}

/// Several series on a shared time axis with per-step durations.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSet {
    pub series: Vec<Vec<f64>>,
    pub durations: Vec<f64>,
}

impl SeriesSet {
    pub fn duration_curves(&self) -> Vec<DurationCurve> {
        self.series.iter().map(|s| duration_curve(s, &self.durations)).collect()
    }

    fn correlations(&self) -> Result<Vec<f64>> {
        let n = self.series.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(weighted_pearson(&self.series[i], &self.series[j], &self.durations)?);
            }
        }
        Ok(out)
    }
}

/// 2/(|P|(|P|−1)) · Σ_{i<j} |corr_ij − corr~_ij|.
pub fn ce_av(observed: &SeriesSet, approx: &SeriesSet) -> Result<f64> {
    check_pairing(observed.series.len(), approx.series.len())?;
    let n = observed.series.len();
    if n < 2 {
        return Err(Error::InvalidArgument("ce_av needs at least two series".into()));
    }
    let co = observed.correlations()?;
    let ca = approx.correlations()?;
    let total: f64 = co.iter().zip(&ca).map(|(a, b)| (a - b).abs()).sum();
    Ok(2.0 / (n as f64 * (n as f64 - 1.0)) * total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxMetrics {
    pub ree_av: f64,
    pub nrmse_av: f64,
    pub ce_av: f64,
}

/// Score a representative year against the full data it was built from.
pub fn evaluate_approximation(data: &DailySeriesMatrix, year: &RepresentativeYear) -> Result<ApproxMetrics> {
    let observed = data.observed_set();
    let approx = year.series_set();
    debug_assert_eq!(observed.series.len(), KINDS);
    let (oc, ac) = (observed.duration_curves(), approx.duration_curves());
    Ok(ApproxMetrics {
        ree_av: ree_av(&oc, &ac)?,
        nrmse_av: nrmse_av(&oc, &ac)?,
        ce_av: ce_av(&observed, &approx)?,
    })
}
