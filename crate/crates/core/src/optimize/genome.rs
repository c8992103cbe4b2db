//! Genome encodings for price-curve calibration and carbon-tax policy search.

use serde::{Deserialize, Serialize};

use crate::domain::CarbonTaxSchedule;
use crate::error::{Error, Result};
use crate::investment::PredictedPriceDurationCurve;

pub const SINGLE_M_BOUNDS: (f64, f64) = (0.0, 0.004);
pub const SINGLE_C_BOUNDS: (f64, f64) = (-30.0, 100.0);
pub const LONG_TERM_M_BOUNDS: (f64, f64) = (0.0, 0.003);
pub const LONG_TERM_C_BOUNDS: (f64, f64) = (-30.0, 50.0);
pub const LONG_TERM_SIGMA_BOUNDS: (f64, f64) = (0.0, 0.001);
pub const SUBSIDY_BOUNDS: (f64, f64) = (0.0, 200.0);
pub const LONG_TERM_YEARS: usize = 17;

/// Predicted-price-curve parameters searched by calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CalibrationGenome {
    /// One curve for every year.
    Single { m: f64, c: f64 },
    /// One curve per year plus per-GenCo uncertainty and the nuclear subsidy.
    LongTerm {
        per_year: Vec<(f64, f64)>,
        sigma_m: f64,
        sigma_c: f64,
        nuclear_subsidy: f64,
    },
}

impl CalibrationGenome {
    pub fn single_bounds() -> Vec<(f64, f64)> {
        vec![SINGLE_M_BOUNDS, SINGLE_C_BOUNDS]
    }

    /// `(m_y, c_y)` pairs for `years` years, then σ_m, σ_c and S_n.
    pub fn long_term_bounds(years: usize) -> Vec<(f64, f64)> {
        let mut b = Vec::with_capacity(2 * years + 3);
        for _ in 0..years {
            b.push(LONG_TERM_M_BOUNDS);
            b.push(LONG_TERM_C_BOUNDS);
        }
        b.extend([LONG_TERM_SIGMA_BOUNDS, LONG_TERM_SIGMA_BOUNDS, SUBSIDY_BOUNDS]);
        b
    }

    pub fn decode_single(genes: &[f64]) -> Result<Self> {
        match genes {
            [m, c] => Ok(CalibrationGenome::Single { m: *m, c: *c }),
            _ => Err(Error::InvalidArgument(format!(
                "single-curve genome has 2 genes, got {}",
                genes.len()
            ))),
        }
    }

    pub fn decode_long_term(genes: &[f64]) -> Result<Self> {
        if genes.len() < 5 || !(genes.len() - 3).is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "long-term genome needs 2 genes per year plus 3, got {}",
                genes.len()
            )));
        }
        let (curves, tail) = genes.split_at(genes.len() - 3);
        Ok(CalibrationGenome::LongTerm {
            per_year: curves.chunks(2).map(|p| (p[0], p[1])).collect(),
            sigma_m: tail[0],
            sigma_c: tail[1],
            nuclear_subsidy: tail[2],
        })
    }

    pub fn price_curve(&self) -> PredictedPriceDurationCurve {
        match self {
            CalibrationGenome::Single { m, c } => PredictedPriceDurationCurve::linear(*m, *c),
            CalibrationGenome::LongTerm {
                per_year,
                sigma_m,
                sigma_c,
                ..
            } => {
                let (m, c) = per_year[0];
                PredictedPriceDurationCurve {
                    m,
                    c,
                    per_year: per_year.clone(),
                    sigma_m: *sigma_m,
                    sigma_c: *sigma_c,
                }
            }
        }
    }

    /// The subsidy gene, if this encoding carries one.
    pub fn nuclear_subsidy(&self) -> Option<f64> {
        match self {
            CalibrationGenome::Single { .. } => None,
            CalibrationGenome::LongTerm { nuclear_subsidy, .. } => Some(*nuclear_subsidy),
        }
    }
}

pub const PER_YEAR_BOUNDS: (f64, f64) = (0.0, 250.0);
pub const LINEAR_SLOPE_BOUNDS: (f64, f64) = (-14.0, 14.0);
pub const LINEAR_INTERCEPT_BOUNDS: (f64, f64) = (0.0, 250.0);
pub const DEFAULT_POLICY_YEARS: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarbonEncoding {
    #[default]
    PerYear,
    Linear,
}

/// Carbon-tax policy searched by the multi-objective harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CarbonPolicyGenome {
    /// One price per simulated year.
    PerYear(Vec<f64>),
    /// `price = a1 · years_since_start + a2`, floored at zero.
    Linear { a1: f64, a2: f64 },
}

impl CarbonPolicyGenome {
    pub fn bounds(encoding: CarbonEncoding, years: usize) -> Vec<(f64, f64)> {
        match encoding {
            CarbonEncoding::PerYear => vec![PER_YEAR_BOUNDS; years],
            CarbonEncoding::Linear => vec![LINEAR_SLOPE_BOUNDS, LINEAR_INTERCEPT_BOUNDS],
        }
    }

    pub fn decode(encoding: CarbonEncoding, genes: &[f64]) -> Result<Self> {
        match encoding {
            CarbonEncoding::PerYear if !genes.is_empty() => Ok(CarbonPolicyGenome::PerYear(genes.to_vec())),
            CarbonEncoding::Linear if genes.len() == 2 => Ok(CarbonPolicyGenome::Linear {
                a1: genes[0],
                a2: genes[1],
            }),
            _ => Err(Error::InvalidArgument(format!(
                "{encoding:?} carbon genome cannot have {} genes",
                genes.len()
            ))),
        }
    }

    /// Yearly prices over `years` years; a per-year genome shorter than that holds its last price.
    pub fn schedule(&self, years: usize) -> CarbonTaxSchedule {
        let prices = match self {
            CarbonPolicyGenome::PerYear(p) => (0..years).map(|y| crate::domain::hold_last(p, y)).collect(),
            CarbonPolicyGenome::Linear { a1, a2 } => (0..years).map(|y| (a1 * y as f64 + a2).max(0.0)).collect(),
        };
        CarbonTaxSchedule::new(prices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_term_round_trip() {
        let b = CalibrationGenome::long_term_bounds(LONG_TERM_YEARS);
        assert_eq!(b.len(), 2 * 17 + 3);
        let genes: Vec<f64> = b.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let g = CalibrationGenome::decode_long_term(&genes).unwrap();
        let curve = g.price_curve();
        assert_eq!(curve.per_year.len(), 17);
        assert_eq!(curve.sigma_m, 0.0005);
        assert_eq!(g.nuclear_subsidy(), Some(100.0));
    }

    #[test]
    fn linear_policy_is_floored_at_zero() {
        let g = CarbonPolicyGenome::decode(CarbonEncoding::Linear, &[-14.0, 20.0]).unwrap();
        assert_eq!(g.schedule(3).prices, vec![20.0, 6.0, 0.0]);
        let g = CarbonPolicyGenome::decode(CarbonEncoding::Linear, &[2.0, 10.0]).unwrap();
        assert_eq!(g.schedule(3).prices, vec![10.0, 12.0, 14.0]);
    }

    #[test]
    fn per_year_bounds() {
        let b = CarbonPolicyGenome::bounds(CarbonEncoding::PerYear, DEFAULT_POLICY_YEARS);
        assert_eq!(b, vec![(0.0, 250.0); 18]);
        assert!(CarbonPolicyGenome::decode(CarbonEncoding::Linear, &[1.0]).is_err());
    }
}
