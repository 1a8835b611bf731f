//! Uniformly sampled time series.

use crate::error::SignalError;
use serde::{Deserialize, Serialize};

/// A uniformly sampled signal starting at t = 0.
///
/// Sample k lives at `t = k * dt`. Values between samples are defined by
/// linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    dt: f64,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self, SignalError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SignalError::InvalidSignal(format!(
                "sampling interval must be positive and finite, got {dt}"
            )));
        }
        if values.is_empty() {
            return Err(SignalError::InvalidSignal("no samples".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::InvalidSignal(format!(
                "non-finite value at sample {bad}"
            )));
        }
        Ok(Self { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of the last sample.
    pub fn duration(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn time_at(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    /// Linear interpolation; exact at stored samples.
    pub fn sample(&self, t: f64) -> Result<f64, SignalError> {
        let end = self.duration();
        if !t.is_finite() || t < 0.0 || t > end {
            return Err(SignalError::OutOfDomain { t, end });
        }
        let pos = t / self.dt;
        let i = (pos.floor() as usize).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return Ok(self.values[i]);
        }
        let frac = pos - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// Resamples onto a uniform grid `0, dt, 2 dt, ..` with `n` samples.
    pub fn resample(&self, dt: f64, n: usize) -> Result<Signal, SignalError> {
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            values.push(self.sample(k as f64 * dt)?);
        }
        Signal::new(dt, values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// A boundary forcing term: either constant in time or a sampled signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Forcing {
    Constant(f64),
    Sampled(Signal),
}

impl Forcing {
    pub fn value_at(&self, t: f64) -> Result<f64, SignalError> {
        match self {
            Forcing::Constant(v) => Ok(*v),
            Forcing::Sampled(s) => s.sample(t),
        }
    }

    /// Largest time at which the forcing is defined.
    pub fn valid_until(&self) -> f64 {
        match self {
            Forcing::Constant(_) => f64::INFINITY,
            Forcing::Sampled(s) => s.duration(),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Forcing::Constant(v) => *v,
            Forcing::Sampled(s) => s.max(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_exact_at_stored_points() {
        let s = Signal::new(2.0, vec![1.0, 3.0, -2.0]).unwrap();
        assert_eq!(s.sample(0.0).unwrap(), 1.0);
        assert_eq!(s.sample(2.0).unwrap(), 3.0);
        assert_eq!(s.sample(4.0).unwrap(), -2.0);
    }

    #[test]
    fn sample_midway_between_equal_neighbors() {
        let s = Signal::new(1.0, vec![5.0, 5.0]).unwrap();
        assert_eq!(s.sample(0.5).unwrap(), 5.0);
    }

    #[test]
    fn sample_midway_interpolates() {
        let s = Signal::new(1.0, vec![280.0, 450.0]).unwrap();
        assert_eq!(s.sample(0.5).unwrap(), 365.0);
    }

    #[test]
    fn sample_out_of_domain_errors() {
        let s = Signal::new(1.0, vec![0.0, 1.0]).unwrap();
        assert!(s.sample(-0.1).is_err());
        assert!(s.sample(1.1).is_err());
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Signal::new(0.0, vec![1.0]).is_err());
        assert!(Signal::new(1.0, vec![]).is_err());
        assert!(Signal::new(1.0, vec![f64::NAN]).is_err());
    }
}
