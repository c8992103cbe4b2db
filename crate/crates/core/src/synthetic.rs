//! Synthetic demand and capacity-factor years built from a handful of day archetypes.

use rand::Rng;

use crate::stochastic::{gaussian, stream_rng};
use crate::temporal::{DailySeriesMatrix, DayProfile, HOURS_PER_DAY, KINDS};

struct Archetype {
    base_mw: f64,
    evening_peak_mw: f64,
    onshore: f64,
    offshore: f64,
    solar_peak: f64,
}

const ARCHETYPES: [Archetype; 4] = [
    // windy winter
    Archetype {
        base_mw: 33_000.0,
        evening_peak_mw: 11_000.0,
        onshore: 0.62,
        offshore: 0.72,
        solar_peak: 0.10,
    },
    // still winter
    Archetype {
        base_mw: 36_000.0,
        evening_peak_mw: 12_000.0,
        onshore: 0.08,
        offshore: 0.12,
        solar_peak: 0.08,
    },
    // sunny summer
    Archetype {
        base_mw: 23_000.0,
        evening_peak_mw: 4_000.0,
        onshore: 0.18,
        offshore: 0.25,
        solar_peak: 0.75,
    },
    // breezy overcast summer
    Archetype {
        base_mw: 25_000.0,
        evening_peak_mw: 5_000.0,
        onshore: 0.45,
        offshore: 0.55,
        solar_peak: 0.25,
    },
];

fn template(a: &Archetype, variant: usize) -> DayProfile {
    let shift = variant as f64 * 0.07;
    let mut d = [[0.0; HOURS_PER_DAY]; KINDS];
    for h in 0..HOURS_PER_DAY {
        let hf = h as f64;
        let morning = (-((hf - 8.0) / 2.0).powi(2)).exp();
        let evening = (-((hf - 18.0) / 2.0).powi(2)).exp();
        let night_dip = if !(6..23).contains(&h) { -0.12 } else { 0.0 };
        d[0][h] = a.base_mw * (1.0 + night_dip + shift) + a.evening_peak_mw * (0.6 * morning + evening);
        let gust = 0.1 * ((hf / 24.0 * std::f64::consts::TAU) + variant as f64).sin();
        d[1][h] = (a.onshore + gust).clamp(0.0, 1.0);
        d[2][h] = (a.offshore + 0.8 * gust).clamp(0.0, 1.0);
        let sun = ((hf - 6.0) / 12.0 * std::f64::consts::PI).sin();
        d[3][h] = if (6..=18).contains(&h) {
            (a.solar_peak * sun).max(0.0)
        } else {
            0.0
        };
    }
    d
}

/// A year of `days` days drawn from `archetypes` distinct day types (up to 8: the four base
/// types and shifted variants), with small Gaussian noise on every hour.
pub fn archetype_year(archetypes: usize, days: usize, seed: u64) -> DailySeriesMatrix {
    let archetypes = archetypes.clamp(1, 2 * ARCHETYPES.len());
    let templates: Vec<DayProfile> = (0..archetypes)
        .map(|i| template(&ARCHETYPES[i % ARCHETYPES.len()], i / ARCHETYPES.len()))
        .collect();
    let mut rng = stream_rng(seed, 0xDA75);
    let mut out = Vec::with_capacity(days);
    for _ in 0..days {
        let t = &templates[rng.random_range(0..archetypes)];
        let mut d = *t;
        for h in 0..HOURS_PER_DAY {
            d[0][h] = (t[0][h] * (1.0 + gaussian(0.0, 0.02, &mut rng))).max(1.0);
            for k in 1..KINDS {
                if t[k][h] > 0.0 {
                    d[k][h] = (t[k][h] + gaussian(0.0, 0.03, &mut rng)).clamp(0.0, 1.0);
                }
            }
        }
        out.push(d);
    }
    let dates = (0..days).map(|i| format!("day{:03}", i + 1)).collect();
    DailySeriesMatrix::new(dates, out).expect("synthetic data satisfies invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let a = archetype_year(4, 365, 1);
        let b = archetype_year(4, 365, 1);
        assert_eq!(a, b);
        assert_eq!(a.len(), 365);
        a.validate().unwrap();
    }
}
