//! Seeded randomness: samplers for cost parameters, residual-distribution fitting and
//! demand perturbation.
//!
//! Every stream is a ChaCha8 generator keyed by `(seed, stream)`, so draws are identical across
//! runs and platforms and independent runs never share state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::Continuous;

use crate::error::{Error, Result};

pub type SimRng = ChaCha8Rng;

/// Independent generator for stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub const DEFAULT_UNIFORM_LOW: f64 = 0.3;
pub const DEFAULT_UNIFORM_HIGH: f64 = 2.0;

fn default_low() -> f64 {
    DEFAULT_UNIFORM_LOW
}
fn default_high() -> f64 {
    DEFAULT_UNIFORM_HIGH
}

/// A parameter sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SamplerSpec {
    None {
        mean: f64,
    },
    Gaussian {
        mean: f64,
        std: f64,
    },
    /// `mean` times a multiplier drawn uniformly from `[low, high]`.
    UniformMultiplier {
        mean: f64,
        #[serde(default = "default_low")]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
    },
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplerSpec::None { mean } if !mean.is_finite() => {
                Err(Error::InvalidArgument("sampler mean must be finite".into()))
            }
            SamplerSpec::Gaussian { mean, std } if !(mean.is_finite() && std >= 0.0 && std.is_finite()) => Err(
                Error::InvalidArgument(format!("gaussian sampler needs std >= 0, got {std}")),
            ),
            SamplerSpec::UniformMultiplier { low, high, .. } if !(0.0 <= low && low <= high) => {
                Err(Error::InvalidArgument(format!(
                    "uniform multiplier bounds must satisfy 0 <= low <= high, got [{low}, {high}]"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SamplerSpec::None { mean } => mean,
            SamplerSpec::Gaussian { mean, std } => gaussian(mean, std, rng),
            SamplerSpec::UniformMultiplier { mean, low, high } => {
                if high > low {
                    mean * rng.random_range(low..=high)
                } else {
                    mean * low
                }
            }
        }
    }
}

pub fn gaussian<R: Rng + ?Sized>(mean: f64, std: f64, rng: &mut R) -> f64 {
    if std > 0.0 {
        Normal::new(mean, std).expect("finite positive std").sample(rng)
    } else {
        mean
    }
}

/// Families tried when fitting prediction residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualFamily {
    Normal,
    Lognormal,
    Gamma,
    Uniform,
}

impl ResidualFamily {
    pub const ALL: [ResidualFamily; 4] = [
        ResidualFamily::Normal,
        ResidualFamily::Lognormal,
        ResidualFamily::Gamma,
        ResidualFamily::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResidualFamily::Normal => "normal",
            ResidualFamily::Lognormal => "lognormal",
            ResidualFamily::Gamma => "gamma",
            ResidualFamily::Uniform => "uniform",
        }
    }
}

/// A fitted closed-form distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedDistribution {
    Normal { mean: f64, std: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { low: f64, high: f64 },
}

impl FittedDistribution {
    pub fn family(&self) -> ResidualFamily {
        match self {
            FittedDistribution::Normal { .. } => ResidualFamily::Normal,
            FittedDistribution::Lognormal { .. } => ResidualFamily::Lognormal,
            FittedDistribution::Gamma { .. } => ResidualFamily::Gamma,
            FittedDistribution::Uniform { .. } => ResidualFamily::Uniform,
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            FittedDistribution::Normal { mean, std } => vec![("mean", mean), ("std", std)],
            FittedDistribution::Lognormal { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
            FittedDistribution::Gamma { shape, scale } => vec![("shape", shape), ("scale", scale)],
            FittedDistribution::Uniform { low, high } => vec![("low", low), ("high", high)],
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            FittedDistribution::Normal { mean, std } => statrs::distribution::Normal::new(mean, std)
                .map(|d| d.pdf(x))
                .unwrap_or(0.0),
            FittedDistribution::Lognormal { mu, sigma } => statrs::distribution::LogNormal::new(mu, sigma)
                .map(|d| d.pdf(x))
                .unwrap_or(0.0),
            FittedDistribution::Gamma { shape, scale } => statrs::distribution::Gamma::new(shape, 1.0 / scale)
                .map(|d| d.pdf(x))
                .unwrap_or(0.0),
            FittedDistribution::Uniform { low, high } => {
                if (low..=high).contains(&x) && high > low {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FittedDistribution::Normal { mean, std } => gaussian(mean, std, rng),
            FittedDistribution::Lognormal { mu, sigma } => match LogNormal::new(mu, sigma) {
                Ok(d) if sigma > 0.0 => d.sample(rng),
                _ => mu.exp(),
            },
            FittedDistribution::Gamma { shape, scale } => {
                Gamma::new(shape, scale).map(|d| d.sample(rng)).unwrap_or(shape * scale)
            }
            FittedDistribution::Uniform { low, high } => {
                if high > low {
                    rng.random_range(low..high)
                } else {
                    low
                }
            }
        }
    }
}

/// Best-fitting residual distribution and its histogram SSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualDistribution {
    pub distribution: FittedDistribution,
    pub sse_fit_score: f64,
}

impl ResidualDistribution {
    /// All mass at zero: perturbation leaves demand unchanged.
    pub fn point_mass_zero() -> Self {
        ResidualDistribution {
            distribution: FittedDistribution::Normal { mean: 0.0, std: 0.0 },
            sse_fit_score: 0.0,
        }
    }
}

pub const MIN_RESIDUALS: usize = 30;
pub const HISTOGRAM_BINS: usize = 50;

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn fit_family(family: ResidualFamily, xs: &[f64]) -> Option<FittedDistribution> {
    let positive = xs.iter().all(|x| *x > 0.0);
    match family {
        ResidualFamily::Normal => {
            let (mean, std) = mean_std(xs);
            Some(FittedDistribution::Normal { mean, std })
        }
        ResidualFamily::Lognormal if positive => {
            let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let (mu, sigma) = mean_std(&logs);
            (sigma > 0.0).then_some(FittedDistribution::Lognormal { mu, sigma })
        }
        ResidualFamily::Gamma if positive => {
            let (mean, std) = mean_std(xs);
            let var = std * std;
            (var > 0.0).then_some(FittedDistribution::Gamma {
                shape: mean * mean / var,
                scale: var / mean,
            })
        }
        ResidualFamily::Uniform => {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(FittedDistribution::Uniform { low: lo, high: hi })
        }
        _ => None,
    }
}

/// Empirical density on equal-width bins spanning the data: (bin centres, densities).
pub fn density_histogram(xs: &[f64], bins: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = xs.len() as f64;
    let centres = (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect();
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    (centres, density)
}

/// Fit each candidate family and keep the one whose density is closest (lowest SSE) to the
/// 50-bin empirical density. Families that cannot represent the data (e.g. lognormal with
/// non-positive residuals) are skipped. Ties go to the earlier family in `families`.
pub fn fit_residual_distribution(residuals: &[f64], families: &[ResidualFamily]) -> Result<ResidualDistribution> {
    if residuals.len() < MIN_RESIDUALS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_RESIDUALS} residuals, got {}",
            residuals.len()
        )));
    }
    if residuals.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("residuals must be finite".into()));
    }
    if residuals.iter().all(|x| *x == residuals[0]) {
        return Err(Error::DegenerateData("all residuals are equal".into()));
    }
    let (centres, density) = density_histogram(residuals, HISTOGRAM_BINS);
    let mut best: Option<ResidualDistribution> = None;
    for &family in families {
        let Some(fitted) = fit_family(family, residuals) else {
            continue;
        };
        let sse: f64 = centres
            .iter()
            .zip(&density)
            .map(|(c, d)| (d - fitted.pdf(*c)).powi(2))
            .sum();
        if best.is_none_or(|b| sse < b.sse_fit_score) {
            best = Some(ResidualDistribution {
                distribution: fitted,
                sse_fit_score: sse,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no candidate family can represent the residuals".into()))
}

/// Add a residual drawn from `dist` to the demand; never negative.
pub fn perturb_demand<R: Rng + ?Sized>(demand_mw: f64, dist: &ResidualDistribution, rng: &mut R) -> f64 {
    (demand_mw + dist.distribution.sample(rng)).max(0.0)
}
