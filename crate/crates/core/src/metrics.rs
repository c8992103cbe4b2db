//! Forecast-error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Actual and predicted values, plus the training history used to scale MASE.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForecastEvalSeries {
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    #[serde(default)]
    pub history: Vec<f64>,
}

impl ForecastEvalSeries {
    pub fn new(actual: Vec<f64>, predicted: Vec<f64>, history: Vec<f64>) -> Result<Self> {
        let s = ForecastEvalSeries {
            actual,
            predicted,
            history,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if self.actual.is_empty() {
            return Err(Error::InvalidArgument("forecast series is empty".into()));
        }
        if self.actual.len() != self.predicted.len() {
            return Err(Error::InvalidArgument(format!(
                "{} actual values but {} predictions",
                self.actual.len(),
                self.predicted.len()
            )));
        }
        Ok(())
    }

    fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.actual.iter().zip(&self.predicted).map(|(y, f)| f - y)
    }
}

/// Mean absolute percentage error, in percent.
pub fn mape(s: &ForecastEvalSeries) -> Result<f64> {
    s.check()?;
    if let Some(i) = s.actual.iter().position(|y| *y == 0.0) {
        return Err(Error::MetricUndefined(format!(
            "MAPE needs non-zero actuals; value {i} is zero"
        )));
    }
    let total: f64 = s
        .actual
        .iter()
        .zip(&s.predicted)
        .map(|(y, f)| ((y - f) / y).abs())
        .sum();
    Ok(100.0 * total / s.actual.len() as f64)
}

pub fn rmse(s: &ForecastEvalSeries) -> Result<f64> {
    s.check()?;
    let sq: f64 = s.errors().map(|e| e * e).sum();
    Ok((sq / s.actual.len() as f64).sqrt())
}

/// Mean absolute error scaled by the in-sample one-step naive forecast error of `history`.
pub fn mase(s: &ForecastEvalSeries) -> Result<f64> {
    s.check()?;
    if s.history.len() < 2 {
        return Err(Error::MetricUndefined(format!(
            "MASE needs at least 2 history values, got {}",
            s.history.len()
        )));
    }
    let naive: f64 = s.history.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (s.history.len() - 1) as f64;
    if naive == 0.0 {
        return Err(Error::MetricUndefined(
            "MASE is undefined for a constant history".into(),
        ));
    }
    let mae: f64 = s.errors().map(f64::abs).sum::<f64>() / s.actual.len() as f64;
    Ok(mae / naive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(actual: &[f64], predicted: &[f64], history: &[f64]) -> ForecastEvalSeries {
        ForecastEvalSeries::new(actual.to_vec(), predicted.to_vec(), history.to_vec()).unwrap()
    }

    #[test]
    fn perfect_forecast_scores_zero() {
        let s = series(&[3.0, 5.0, 4.0], &[3.0, 5.0, 4.0], &[1.0, 2.0]);
        assert_eq!(mape(&s).unwrap(), 0.0);
        assert_eq!(rmse(&s).unwrap(), 0.0);
        assert_eq!(mase(&s).unwrap(), 0.0);
    }

    #[test]
    fn single_point_ten_percent() {
        let s = series(&[100.0], &[110.0], &[]);
        assert!((mape(&s).unwrap() - 10.0).abs() < 1e-12);
        assert!((rmse(&s).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mase_worked_example() {
        let s = series(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4], &[1.0, 2.0, 3.0, 4.0]);
        assert!((mase(&s).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn undefined_cases() {
        let s = series(&[0.0, 1.0], &[1.0, 1.0], &[2.0, 2.0, 2.0]);
        assert!(matches!(mape(&s), Err(Error::MetricUndefined(_))));
        assert!(matches!(mase(&s), Err(Error::MetricUndefined(_))));
        assert!(ForecastEvalSeries::new(vec![1.0], vec![], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn naive_forecast_has_unit_mase(ys in prop::collection::vec(-100.0..100.0f64, 3..40)) {
            let history = ys.clone();
            prop_assume!(history.windows(2).any(|w| w[0] != w[1]));
            let actual = ys[1..].to_vec();
            let predicted = ys[..ys.len() - 1].to_vec();
            let m = mase(&series(&actual, &predicted, &history)).unwrap();
            prop_assert!((m - 1.0).abs() < 1e-12);
        }
    }
}
