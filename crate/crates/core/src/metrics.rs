//! Error quantification: symmetric MAPE and RMSE.

use crate::error::MetricsError;
use serde::{Deserialize, Serialize};

/// Error summary of a forecast against a reference series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Symmetric mean absolute percentage error, percent.
    pub mape: f64,
    /// Root-mean-square error, in the unit of the series.
    pub rmse: f64,
    /// Largest absolute deviation, in the unit of the series.
    pub max_abs_error: f64,
    pub n_samples: usize,
}

impl ErrorReport {
    pub fn compute(reference: &[f64], forecast: &[f64]) -> Result<Self, MetricsError> {
        Ok(ErrorReport {
            mape: mape(reference, forecast)?,
            rmse: rmse(reference, forecast)?,
            max_abs_error: reference
                .iter()
                .zip(forecast)
                .map(|(r, f)| (r - f).abs())
                .fold(0.0, f64::max),
            n_samples: reference.len(),
        })
    }

    /// One CSV row matching [`ErrorReport::csv_header`].
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.mape, self.rmse, self.max_abs_error, self.n_samples)
    }

    pub fn csv_header() -> &'static str {
        "mape_pct,rmse,max_abs_error,n_samples"
    }
}

impl std::fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "MAPE {:.4} %, RMSE {:.4}, max |error| {:.4} over {} samples",
            self.mape, self.rmse, self.max_abs_error, self.n_samples
        )
    }
}

fn check_lengths(reference: &[f64], forecast: &[f64]) -> Result<(), MetricsError> {
    if reference.len() != forecast.len() {
        return Err(MetricsError::LengthMismatch(reference.len(), forecast.len()));
    }
    if reference.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Symmetric mean absolute percentage error in percent:
/// `(100 / N) sum |R_i - F_i| / (|R_i + F_i| / 2)`.
pub fn mape(reference: &[f64], forecast: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(reference, forecast)?;
    let mut acc = 0.0;
    for (i, (r, f)) in reference.iter().zip(forecast).enumerate() {
        let denom = 0.5 * (r + f).abs();
        if denom == 0.0 {
            return Err(MetricsError::ZeroSumSample(i));
        }
        acc += (r - f).abs() / denom;
    }
    Ok(100.0 * acc / reference.len() as f64)
}

/// Root-mean-square error `sqrt((1/N) sum (R_i - F_i)^2)`.
pub fn rmse(reference: &[f64], forecast: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(reference, forecast)?;
    let sum_sq: f64 = reference.iter().zip(forecast).map(|(r, f)| (r - f) * (r - f)).sum();
    Ok((sum_sq / reference.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn mape_identity_is_zero() {
        let r = vec![3.0, -1.5, 42.0];
        assert_eq!(mape(&r, &r).unwrap(), 0.0);
    }

    #[test]
    fn mape_single_sample_arithmetic() {
        let m = mape(&[100.0], &[101.0]).unwrap();
        assert_abs_diff_eq!(m, 0.99502, epsilon = 1e-5);
    }

    #[test]
    fn mape_two_sample_arithmetic() {
        let m = mape(&[1.0, 3.0], &[2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(m, 33.3333, epsilon = 1e-4);
    }

    #[test]
    fn mape_zero_sum_sample_identifies_index() {
        let err = mape(&[1.0, -2.0], &[1.0, 2.0]).unwrap_err();
        match err {
            MetricsError::ZeroSumSample(i) => assert_eq!(i, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rmse_identity_and_arithmetic() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.53553, epsilon = 1e-5);
        assert_eq!(rmse(&[5.0], &[3.0]).unwrap(), 2.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(mape(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[1.0], &[]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn both_metrics_symmetric_in_arguments() {
        let r = vec![1.0, 2.0, 5.0];
        let f = vec![1.5, 1.0, 7.0];
        assert_eq!(mape(&r, &f).unwrap(), mape(&f, &r).unwrap());
        assert_eq!(rmse(&r, &f).unwrap(), rmse(&f, &r).unwrap());
    }

    #[test]
    fn rmse_dominates_mean_absolute_error() {
        let r = vec![1.0, 2.0, 5.0, -1.0];
        let f = vec![1.5, 1.0, 7.0, 0.0];
        let mae: f64 =
            r.iter().zip(&f).map(|(a, b): (&f64, &f64)| (a - b).abs()).sum::<f64>() / r.len() as f64;
        assert!(rmse(&r, &f).unwrap() >= mae);
    }

    #[test]
    fn scaling_behaviour() {
        let r = vec![1.0, 2.0, 5.0];
        let f = vec![1.5, 1.0, 7.0];
        let c = 3.7;
        let rc: Vec<f64> = r.iter().map(|v| c * v).collect();
        let fc: Vec<f64> = f.iter().map(|v| c * v).collect();
        assert_relative_eq!(rmse(&rc, &fc).unwrap(), c * rmse(&r, &f).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(mape(&rc, &fc).unwrap(), mape(&r, &f).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn report_aggregates_all_fields() {
        let rep = ErrorReport::compute(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_eq!(rep.max_abs_error, 4.0);
        assert_eq!(rep.n_samples, 2);
        assert!(rep.csv_row().split(',').count() == 4);
    }
}
