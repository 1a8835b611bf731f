//! Constitutive curves: named built-ins with parameters or monotone
//! breakpoint tables over water saturation.

use crate::error::MaterialError;
use serde::{Deserialize, Serialize};

/// Piecewise-linear table over a monotone abscissa. Evaluation clamps
/// outside the breakpoint range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl BreakpointTable {
    pub fn validate(&self, name: &str) -> Result<(), MaterialError> {
        if self.x.len() < 2 || self.x.len() != self.y.len() {
            return Err(MaterialError::InvalidMaterial(format!(
                "{name}: table needs >= 2 breakpoints and equal x/y lengths"
            )));
        }
        if self.x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MaterialError::InvalidMaterial(format!(
                "{name}: table abscissa must be strictly increasing"
            )));
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(MaterialError::InvalidMaterial(format!(
                "{name}: table contains non-finite entries"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.y[0];
        }
        if x >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&xi| xi <= x) - 1;
        let frac = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.y[i] + frac * (self.y[i + 1] - self.y[i])
    }
}

/// Water-activity isotherm a_w(S_w) in [0, 1].
///
/// The exponential form `1 - exp(-shape * S_w)` keeps the material in the
/// free-water regime for moderate saturations; the table form allows
/// measured isotherms. Temperature dependence is accepted by the call
/// site but not used by the built-ins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivityCurve {
    Exponential { shape: f64 },
    Table(BreakpointTable),
}

impl ActivityCurve {
    pub fn validate(&self) -> Result<(), MaterialError> {
        match self {
            ActivityCurve::Exponential { shape } => {
                if !(*shape > 0.0) {
                    return Err(MaterialError::InvalidMaterial(
                        "water_activity: shape must be > 0".into(),
                    ));
                }
            }
            ActivityCurve::Table(t) => {
                t.validate("water_activity")?;
                if t.y.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(MaterialError::InvalidMaterial(
                        "water_activity: table values must lie in [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s_w: f64) -> f64 {
        let a = match self {
            ActivityCurve::Exponential { shape } => 1.0 - (-shape * s_w.max(0.0)).exp(),
            ActivityCurve::Table(t) => t.eval(s_w),
        };
        a.clamp(0.0, 1.0)
    }
}

/// Capillary diffusivity D_w,cw(S_w) in m^2/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapillaryCurve {
    Constant { value: f64 },
    /// `value * exp(rate * (S_w - 1))`: diffusivity decays as the
    /// material dries.
    ExponentialMoisture { value: f64, rate: f64 },
    Table(BreakpointTable),
}

impl CapillaryCurve {
    pub fn validate(&self) -> Result<(), MaterialError> {
        match self {
            CapillaryCurve::Constant { value } => {
                if !(*value >= 0.0) || !value.is_finite() {
                    return Err(MaterialError::InvalidMaterial(
                        "capillary_diffusivity: value must be finite and >= 0".into(),
                    ));
                }
            }
            CapillaryCurve::ExponentialMoisture { value, rate } => {
                if !(*value >= 0.0) || !value.is_finite() || !rate.is_finite() {
                    return Err(MaterialError::InvalidMaterial(
                        "capillary_diffusivity: parameters must be finite, value >= 0".into(),
                    ));
                }
            }
            CapillaryCurve::Table(t) => {
                t.validate("capillary_diffusivity")?;
                if t.y.iter().any(|&v| v < 0.0) {
                    return Err(MaterialError::InvalidMaterial(
                        "capillary_diffusivity: table values must be >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s_w: f64) -> f64 {
        match self {
            CapillaryCurve::Constant { value } => *value,
            CapillaryCurve::ExponentialMoisture { value, rate } => {
                value * (rate * (s_w.clamp(0.0, 1.0) - 1.0)).exp()
            }
            CapillaryCurve::Table(t) => t.eval(s_w).max(0.0),
        }
    }
}

/// Relative-permeability curves.
///
/// `k_rw = max(0, (S_w - S_ir) / (1 - S_ir))^water_exponent` and
/// `k_rg = max(0, gas_a - gas_b * S_w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelPermCurves {
    pub irreducible_water_saturation: f64,
    pub water_exponent: f64,
    pub gas_a: f64,
    pub gas_b: f64,
}

impl Default for RelPermCurves {
    fn default() -> Self {
        Self {
            irreducible_water_saturation: 0.08,
            water_exponent: 3.0,
            gas_a: 1.01,
            gas_b: 1.01,
        }
    }
}

impl RelPermCurves {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(0.0..1.0).contains(&self.irreducible_water_saturation) {
            return Err(MaterialError::InvalidMaterial(
                "relative_permeability: irreducible saturation must be in [0, 1)".into(),
            ));
        }
        if !(self.water_exponent > 0.0) {
            return Err(MaterialError::InvalidMaterial(
                "relative_permeability: water exponent must be > 0".into(),
            ));
        }
        if !self.gas_a.is_finite() || !self.gas_b.is_finite() {
            return Err(MaterialError::InvalidMaterial(
                "relative_permeability: gas curve constants must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn water(&self, s_w: f64) -> f64 {
        let s_ir = self.irreducible_water_saturation;
        let reduced = ((s_w - s_ir) / (1.0 - s_ir)).max(0.0);
        reduced.powf(self.water_exponent)
    }

    pub fn gas(&self, s_w: f64) -> f64 {
        (self.gas_a - self.gas_b * s_w).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_clamps() {
        let t = BreakpointTable { x: vec![0.0, 1.0, 2.0], y: vec![0.0, 10.0, 10.0] };
        t.validate("t").unwrap();
        assert_eq!(t.eval(0.5), 5.0);
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(3.0), 10.0);
    }

    #[test]
    fn table_rejects_non_monotone() {
        let t = BreakpointTable { x: vec![0.0, 0.0], y: vec![1.0, 2.0] };
        assert!(t.validate("t").is_err());
    }

    #[test]
    fn exponential_activity_near_one_at_half_saturation() {
        let a = ActivityCurve::Exponential { shape: 10.0 };
        assert!(a.eval(0.5) > 0.99);
        assert_eq!(a.eval(0.0), 0.0);
        assert!(a.eval(1.0) <= 1.0);
    }

    #[test]
    fn rel_perm_limits() {
        let rp = RelPermCurves::default();
        assert_eq!(rp.water(0.05), 0.0);
        assert!((rp.water(1.0) - 1.0).abs() < 1e-12);
        assert_eq!(rp.gas(1.0), 0.0);
        assert!((rp.gas(0.0) - 1.01).abs() < 1e-12);
    }
}
