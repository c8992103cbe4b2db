//! The simulation time axis: load-duration segments or weighted representative days.

mod cluster;
mod metrics;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Resource;
use crate::error::{Error, Result};

pub use cluster::{cluster_days, cluster_weights, select_representative, Assignment, ClusterMethod};
pub use metrics::{
    ce_av, duration_curve, evaluate_approximation, nrmse_av, pearson, ree_av, weighted_pearson, ApproxMetrics,
    DurationCurve, SeriesSet, NRMSE_GRID_POINTS,
};

pub const HOURS_PER_DAY: usize = 24;
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Series recorded for every day, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    Demand,
    Onshore,
    Offshore,
    Solar,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 4] = [
        SeriesKind::Demand,
        SeriesKind::Onshore,
        SeriesKind::Offshore,
        SeriesKind::Solar,
    ];

    pub fn column(self) -> &'static str {
        match self {
            SeriesKind::Demand => "demand_mw",
            SeriesKind::Onshore => "onshore_cf",
            SeriesKind::Offshore => "offshore_cf",
            SeriesKind::Solar => "solar_cf",
        }
    }
}

pub const KINDS: usize = SeriesKind::ALL.len();

/// One day of hourly values for every series kind, indexed `[kind][hour]`.
pub type DayProfile = [[f64; HOURS_PER_DAY]; KINDS];

/// Hourly demand and capacity factors for a run of days.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeriesMatrix {
    pub dates: Vec<String>,
    pub days: Vec<DayProfile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HourRow {
    date: String,
    hour: usize,
    demand_mw: f64,
    onshore_cf: f64,
    offshore_cf: f64,
    solar_cf: f64,
}

impl DailySeriesMatrix {
    pub fn new(dates: Vec<String>, days: Vec<DayProfile>) -> Result<Self> {
        let m = DailySeriesMatrix { dates, days };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dates.len() != self.days.len() {
            return Err(Error::Validation("dates and days differ in length".into()));
        }
        for (date, day) in self.dates.iter().zip(&self.days) {
            for h in 0..HOURS_PER_DAY {
                if !(day[0][h] > 0.0 && day[0][h].is_finite()) {
                    return Err(Error::Validation(format!(
                        "{date} hour {h}: demand must be > 0, got {}",
                        day[0][h]
                    )));
                }
                for kind in 1..KINDS {
                    if !(0.0..=1.0).contains(&day[kind][h]) {
                        return Err(Error::Validation(format!(
                            "{date} hour {h}: {} must be in [0, 1], got {}",
                            SeriesKind::ALL[kind].column(),
                            day[kind][h]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Read the hourly CSV (date, hour, demand_mw, onshore_cf, offshore_cf, solar_cf).
    /// Days appear in first-seen order and must each carry hours 0..=23 exactly once.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut dates: Vec<String> = Vec::new();
        let mut days: Vec<DayProfile> = Vec::new();
        let mut seen: Vec<[bool; HOURS_PER_DAY]> = Vec::new();
        for row in rdr.deserialize() {
            let row: HourRow = row?;
            if row.hour >= HOURS_PER_DAY {
                return Err(Error::Validation(format!(
                    "{}: hour {} out of range",
                    row.date, row.hour
                )));
            }
            let idx = match dates.last() {
                Some(d) if *d == row.date => dates.len() - 1,
                _ => match dates.iter().position(|d| *d == row.date) {
                    Some(i) => i,
                    None => {
                        dates.push(row.date.clone());
                        days.push([[0.0; HOURS_PER_DAY]; KINDS]);
                        seen.push([false; HOURS_PER_DAY]);
                        dates.len() - 1
                    }
                },
            };
            if seen[idx][row.hour] {
                return Err(Error::Validation(format!("{}: duplicate hour {}", row.date, row.hour)));
            }
            seen[idx][row.hour] = true;
            let day = &mut days[idx];
            day[0][row.hour] = row.demand_mw;
            day[1][row.hour] = row.onshore_cf;
            day[2][row.hour] = row.offshore_cf;
            day[3][row.hour] = row.solar_cf;
        }
        if let Some(i) = seen.iter().position(|s| s.iter().any(|x| !x)) {
            return Err(Error::Validation(format!("{}: missing hours", dates[i])));
        }
        Self::new(dates, days)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv_writer<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for (date, day) in self.dates.iter().zip(&self.days) {
            for hour in 0..HOURS_PER_DAY {
                wtr.serialize(HourRow {
                    date: date.clone(),
                    hour,
                    demand_mw: day[0][hour],
                    onshore_cf: day[1][hour],
                    offshore_cf: day[2][hour],
                    solar_cf: day[3][hour],
                })?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Full-resolution series of one kind, day after day.
    pub fn hourly(&self, kind: usize) -> Vec<f64> {
        self.days.iter().flat_map(|d| d[kind].iter().copied()).collect()
    }

    /// Every hour with unit duration, as a series set.
    pub fn observed_set(&self) -> SeriesSet {
        let series: Vec<Vec<f64>> = (0..KINDS).map(|k| self.hourly(k)).collect();
        let n = series[0].len();
        SeriesSet {
            series,
            durations: vec![1.0; n],
        }
    }

    /// Per-day feature vectors: each kind min-max normalised over the whole dataset, then
    /// the four 24-hour profiles concatenated.
    pub fn features(&self) -> Vec<Vec<f64>> {
        let mut lo = [f64::INFINITY; KINDS];
        let mut hi = [f64::NEG_INFINITY; KINDS];
        for day in &self.days {
            for k in 0..KINDS {
                for v in day[k] {
                    lo[k] = lo[k].min(v);
                    hi[k] = hi[k].max(v);
                }
            }
        }
        self.days
            .iter()
            .map(|day| {
                let mut f = Vec::with_capacity(KINDS * HOURS_PER_DAY);
                for k in 0..KINDS {
                    let span = hi[k] - lo[k];
                    for v in day[k] {
                        f.push(if span > 0.0 { (v - lo[k]) / span } else { 0.0 });
                    }
                }
                f
            })
            .collect()
    }
}

/// A representative day and the share of source days it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeDay {
    pub profile: DayProfile,
    pub weight: f64,
}

/// Weighted representative days approximating a full year.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeYear {
    pub rep_days: Vec<RepresentativeDay>,
    pub source_day_count: usize,
}

/// Hours each hour-slot of a representative day stands for. Snaps to the nearest integer when
/// the weight is a whole-day fraction so that totals stay exact.
fn slot_duration(weight: f64, source_day_count: usize) -> f64 {
    let d = weight * source_day_count as f64;
    let r = d.round();
    if (d - r).abs() < 1e-9 {
        r
    } else {
        d
    }
}

impl RepresentativeYear {
    pub fn slot_durations(&self) -> Vec<f64> {
        self.rep_days
            .iter()
            .map(|d| slot_duration(d.weight, self.source_day_count))
            .collect()
    }

    pub fn total_hours(&self) -> f64 {
        self.slot_durations().iter().map(|d| d * HOURS_PER_DAY as f64).sum()
    }

    pub fn series_set(&self) -> SeriesSet {
        let durations: Vec<f64> = self
            .slot_durations()
            .into_iter()
            .flat_map(|d| std::iter::repeat_n(d, HOURS_PER_DAY))
            .collect();
        let series = (0..KINDS)
            .map(|k| {
                self.rep_days
                    .iter()
                    .flat_map(|d| d.profile[k].iter().copied())
                    .collect()
            })
            .collect();
        SeriesSet { series, durations }
    }

    pub fn time_steps(&self) -> Vec<TimeStep> {
        let durations = self.slot_durations();
        let mut steps = Vec::with_capacity(self.rep_days.len() * HOURS_PER_DAY);
        for (i, (day, dur)) in self.rep_days.iter().zip(durations).enumerate() {
            for h in 0..HOURS_PER_DAY {
                steps.push(TimeStep {
                    day: i,
                    hour: h,
                    demand_mw: day.profile[0][h],
                    capacity_factors: [day.profile[1][h], day.profile[2][h], day.profile[3][h]],
                    duration_h: dur,
                });
            }
        }
        steps
    }

    /// Write the representative-year CSV (rep_day_index, weight, hour, one column per series).
    pub fn to_csv_writer<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["rep_day_index", "weight", "hour"];
        header.extend(SeriesKind::ALL.iter().map(|k| k.column()));
        wtr.write_record(&header)?;
        for (i, day) in self.rep_days.iter().enumerate() {
            for h in 0..HOURS_PER_DAY {
                let mut rec = vec![i.to_string(), day.weight.to_string(), h.to_string()];
                rec.extend(day.profile.iter().map(|k| k[h].to_string()));
                wtr.write_record(&rec)?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Build a representative year from chosen days and their weights.
pub fn assemble_representative_year(
    reps: Vec<DayProfile>,
    weights: &[f64],
    source_day_count: usize,
) -> Result<RepresentativeYear> {
    if reps.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} representative days but {} weights",
            reps.len(),
            weights.len()
        )));
    }
    Ok(RepresentativeYear {
        rep_days: reps
            .into_iter()
            .zip(weights)
            .map(|(profile, &weight)| RepresentativeDay { profile, weight })
            .collect(),
        source_day_count,
    })
}

/// One market clearing period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStep {
    /// Representative day (or 0 for load-duration segments).
    pub day: usize,
    /// Hour of day, or segment index for load-duration segments.
    pub hour: usize,
    pub demand_mw: f64,
    /// Onshore, offshore, solar.
    pub capacity_factors: [f64; 3],
    pub duration_h: f64,
}

impl TimeStep {
    pub fn capacity_factor(&self, resource: Resource) -> f64 {
        self.capacity_factors[resource.index()]
    }
}

/// Which representative of a cluster is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentativeMode {
    #[default]
    Medoid,
    Centroid,
}

fn default_k() -> usize {
    8
}
fn default_restarts() -> usize {
    10
}
fn default_segments() -> usize {
    20
}

/// How a year is compressed into clearing periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TemporalMode {
    /// Equal-duration blocks of the sorted hourly load.
    Ldc {
        #[serde(default = "default_segments")]
        segments: usize,
    },
    RepresentativeDays {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        method: ClusterMethod,
        #[serde(default)]
        representative: RepresentativeMode,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
}

impl Default for TemporalMode {
    fn default() -> Self {
        TemporalMode::RepresentativeDays {
            k: default_k(),
            method: ClusterMethod::default(),
            representative: RepresentativeMode::default(),
            restarts: default_restarts(),
        }
    }
}

/// Cluster the days and return the representative year.
pub fn representative_year(
    data: &DailySeriesMatrix,
    k: usize,
    method: ClusterMethod,
    mode: RepresentativeMode,
    restarts: usize,
    seed: u64,
) -> Result<RepresentativeYear> {
    let features = data.features();
    let assignment = cluster_days(&features, k, method, restarts, seed)?;
    let reps = assignment
        .members()
        .iter()
        .map(|m| select_representative(data, &features, m, mode))
        .collect::<Result<Vec<_>>>()?;
    assemble_representative_year(reps, &cluster_weights(&assignment), data.len())
}

/// Sort all hours by demand and average them into equal-duration blocks.
pub fn load_duration_segments(data: &DailySeriesMatrix, segments: usize) -> Result<Vec<TimeStep>> {
    let mut hours: Vec<(f64, [f64; 3])> = data
        .days
        .iter()
        .flat_map(|d| (0..HOURS_PER_DAY).map(move |h| (d[0][h], [d[1][h], d[2][h], d[3][h]])))
        .collect();
    if segments == 0 || segments > hours.len() {
        return Err(Error::InvalidArgument(format!(
            "segments must be in 1..={}, got {segments}",
            hours.len()
        )));
    }
    hours.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = hours.len();
    let steps = (0..segments)
        .map(|s| {
            let (lo, hi) = (s * n / segments, (s + 1) * n / segments);
            let block = &hours[lo..hi];
            let len = block.len() as f64;
            let mut cf = [0.0; 3];
            for (_, c) in block {
                for (acc, v) in cf.iter_mut().zip(c) {
                    *acc += v / len;
                }
            }
            TimeStep {
                day: 0,
                hour: s,
                demand_mw: block.iter().map(|b| b.0).sum::<f64>() / len,
                capacity_factors: cf,
                duration_h: len,
            }
        })
        .collect();
    Ok(steps)
}

/// Build the yearly clearing periods for a temporal mode. Durations are scaled so the steps
/// cover one 8760-hour year whatever the length of the source series.
pub fn build_time_steps(data: &DailySeriesMatrix, mode: TemporalMode, seed: u64) -> Result<Vec<TimeStep>> {
    let mut steps = match mode {
        TemporalMode::Ldc { segments } => load_duration_segments(data, segments)?,
        TemporalMode::RepresentativeDays {
            k,
            method,
            representative,
            restarts,
        } => representative_year(data, k, method, representative, restarts, seed)?.time_steps(),
    };
    let total: f64 = steps.iter().map(|s| s.duration_h).sum();
    if total != HOURS_PER_YEAR {
        let scale = HOURS_PER_YEAR / total;
        steps.iter_mut().for_each(|s| s.duration_h *= scale);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn flat_day(demand: f64) -> DayProfile {
        let mut d = [[0.0; HOURS_PER_DAY]; KINDS];
        d[0] = [demand; HOURS_PER_DAY];
        d
    }

    #[test]
    fn assemble_single_cluster_full_year() {
        let y = assemble_representative_year(vec![flat_day(1.0)], &[1.0], 365).unwrap();
        assert_eq!(y.slot_durations(), vec![365.0]);
        assert_eq!(y.total_hours(), 8760.0);
    }

    #[test]
    fn assemble_eight_days_gives_192_steps() {
        let data = synthetic::archetype_year(4, 365, 3);
        let y = representative_year(&data, 8, ClusterMethod::Kmeans, RepresentativeMode::Medoid, 3, 1).unwrap();
        assert_eq!(y.time_steps().len(), 192);
        assert_eq!(y.total_hours(), 8760.0);
    }

    #[test]
    fn assemble_quarter_weights() {
        let y = assemble_representative_year(vec![flat_day(1.0), flat_day(2.0)], &[0.25, 0.75], 4).unwrap();
        assert_eq!(y.slot_durations(), vec![1.0, 3.0]);
    }

    #[test]
    fn assemble_length_mismatch() {
        assert!(matches!(
            assemble_representative_year(vec![flat_day(1.0)], &[0.5, 0.5], 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ldc_segments_cover_year() {
        let data = synthetic::archetype_year(4, 365, 9);
        let steps = load_duration_segments(&data, 20).unwrap();
        assert_eq!(steps.len(), 20);
        assert_eq!(steps.iter().map(|s| s.duration_h).sum::<f64>(), 8760.0);
        assert!(steps.windows(2).all(|w| w[0].demand_mw >= w[1].demand_mw));
    }

    #[test]
    fn short_series_is_stretched_to_a_year() {
        let data = synthetic::archetype_year(4, 20, 9);
        let steps = build_time_steps(&data, TemporalMode::Ldc { segments: 6 }, 0).unwrap();
        let total: f64 = steps.iter().map(|s| s.duration_h).sum();
        assert!((total - 8760.0).abs() < 1e-6);
    }

    #[test]
    fn csv_round_trip() {
        let data = synthetic::archetype_year(2, 5, 1);
        let mut buf = Vec::new();
        data.to_csv_writer(&mut buf).unwrap();
        let back = DailySeriesMatrix::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.dates, data.dates);
        for (a, b) in back.days.iter().zip(&data.days) {
            for k in 0..KINDS {
                for h in 0..HOURS_PER_DAY {
                    assert!((a[k][h] - b[k][h]).abs() <= 1e-9 * b[k][h].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn csv_missing_hour_rejected() {
        let text = "date,hour,demand_mw,onshore_cf,offshore_cf,solar_cf\nd1,0,10,0.1,0.1,0\n";
        assert!(DailySeriesMatrix::from_csv_reader(text.as_bytes()).is_err());
    }

    #[test]
    fn capacity_factor_out_of_range_rejected() {
        let mut d = flat_day(5.0);
        d[1][3] = 1.5;
        assert!(DailySeriesMatrix::new(vec!["x".into()], vec![d]).is_err());
    }
}
