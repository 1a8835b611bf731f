//! Thermophysical and constitutive relations of the porous food.
//!
//! Everything in this module is a pure function over immutable inputs and
//! safe to call from any number of threads. All quantities are SI:
//! temperatures in K, pressures in Pa, concentrations in kg/m^3.

mod curves;

pub use curves::{ActivityCurve, BreakpointTable, CapillaryCurve, RelPermCurves};

use crate::error::MaterialError;
use serde::{Deserialize, Serialize};

/// Universal gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314_462_618;

/// Saturation clamp applied inside flux and evaporation evaluation so the
/// vapor density `c_v / (S_g phi)` stays defined when a phase vanishes.
/// Stored states are never clamped.
pub const SATURATION_EPSILON: f64 = 1e-6;

/// How a phase's density is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityModel {
    /// Fixed reference density in kg/m^3 (water, solid).
    Constant(f64),
    /// Ideal-gas law from local pressure and temperature (gas, vapor).
    IdealGas,
}

/// Bulk properties of one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProperties {
    pub density: DensityModel,
    /// Dynamic viscosity, Pa s.
    pub dynamic_viscosity: f64,
    /// Specific heat, J/(kg K).
    pub specific_heat: f64,
    /// Thermal conductivity, W/(m K).
    pub thermal_conductivity: f64,
    /// Molar mass, kg/mol. Required for ideal-gas phases.
    pub molar_mass: Option<f64>,
}

impl PhaseProperties {
    fn validate(&self, name: &str) -> Result<(), MaterialError> {
        let bad = |what: &str| {
            Err(MaterialError::InvalidMaterial(format!(
                "{name}: {what} must be strictly positive"
            )))
        };
        if let DensityModel::Constant(rho) = self.density {
            if !(rho > 0.0) {
                return bad("reference density");
            }
        }
        if !(self.dynamic_viscosity > 0.0) {
            return bad("dynamic viscosity");
        }
        if !(self.specific_heat > 0.0) {
            return bad("specific heat");
        }
        if !(self.thermal_conductivity > 0.0) {
            return bad("thermal conductivity");
        }
        match self.molar_mass {
            Some(m) if !(m > 0.0) => return bad("molar mass"),
            None if matches!(self.density, DensityModel::IdealGas) => {
                return Err(MaterialError::InvalidMaterial(format!(
                    "{name}: molar mass required for ideal-gas phase"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Constant reference density; panics on ideal-gas phases, which have
    /// no single density.
    pub fn reference_density(&self) -> f64 {
        match self.density {
            DensityModel::Constant(rho) => rho,
            DensityModel::IdealGas => panic!("ideal-gas phase has no reference density"),
        }
    }

    pub fn molar_mass(&self) -> f64 {
        self.molar_mass.expect("molar mass not set")
    }
}

/// Primary unknowns at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalState {
    /// Temperature, K.
    pub temperature: f64,
    /// Total gas pressure, Pa.
    pub pressure: f64,
    /// Vapor concentration, kg/m^3 (per total volume).
    pub vapor_conc: f64,
    /// Liquid-water concentration, kg/m^3 (per total volume).
    pub water_conc: f64,
}

impl LocalState {
    pub fn validate(&self, material: &FoodMaterial, cell: usize) -> Result<(), MaterialError> {
        let fail = |reason: String| Err(MaterialError::InvalidState { cell, reason });
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return fail(format!("temperature {} K must be > 0", self.temperature));
        }
        if !(self.pressure > 0.0) || !self.pressure.is_finite() {
            return fail(format!("pressure {} Pa must be > 0", self.pressure));
        }
        if !(self.vapor_conc >= 0.0) || !self.vapor_conc.is_finite() {
            return fail(format!("vapor concentration {} kg/m3 must be >= 0", self.vapor_conc));
        }
        let c_w_max = material.water_capacity();
        if !self.water_conc.is_finite() || self.water_conc < 0.0 || self.water_conc > c_w_max {
            return fail(format!(
                "water concentration {} kg/m3 outside [0, {}]",
                self.water_conc, c_w_max
            ));
        }
        Ok(())
    }
}

/// Gas-phase composition derived from a local state.
///
/// The gas is a vapor/air mixture: the vapor partial density follows from
/// `c_v`, the air partial density fills the remaining pressure, and the
/// mixture molar mass is their harmonic mass-fraction mix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasMixture {
    /// Vapor partial density within the gas phase, kg/m^3.
    pub rho_vapor: f64,
    /// Air partial density, kg/m^3.
    pub rho_air: f64,
    /// Total gas density, kg/m^3.
    pub rho_gas: f64,
    /// Vapor mass fraction.
    pub omega_vapor: f64,
    /// Mixture molar mass, kg/mol.
    pub molar_mass: f64,
}

/// Complete description of the porous food.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodMaterial {
    /// Equivalent porosity: constant pore volume fraction shared by gas
    /// and water.
    pub porosity: f64,
    pub solid: PhaseProperties,
    pub water: PhaseProperties,
    pub gas: PhaseProperties,
    pub vapor: PhaseProperties,
    /// Intrinsic gas permeability, m^2.
    pub permeability_gas: f64,
    /// Intrinsic water permeability, m^2.
    pub permeability_water: f64,
    pub rel_perm: RelPermCurves,
    pub capillary_diffusivity: CapillaryCurve,
    /// Effective binary diffusivity of vapor in the pore gas, m^2/s.
    pub gas_diffusivity_eff: f64,
    pub water_activity: ActivityCurve,
    /// Non-equilibrium evaporation rate constant, 1/s.
    pub evaporation_constant: f64,
    /// Latent heat of evaporation, J/kg.
    pub latent_heat: f64,
}

impl FoodMaterial {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(MaterialError::InvalidMaterial(format!(
                "porosity {} must be in (0, 1)",
                self.porosity
            )));
        }
        self.solid.validate("solid")?;
        self.water.validate("water")?;
        self.gas.validate("gas")?;
        self.vapor.validate("vapor")?;
        if !matches!(self.water.density, DensityModel::Constant(_)) {
            return Err(MaterialError::InvalidMaterial(
                "water phase must have a constant reference density".into(),
            ));
        }
        if !matches!(self.solid.density, DensityModel::Constant(_)) {
            return Err(MaterialError::InvalidMaterial(
                "solid phase must have a constant reference density".into(),
            ));
        }
        for (name, v) in [
            ("gas permeability", self.permeability_gas),
            ("water permeability", self.permeability_water),
            ("effective gas diffusivity", self.gas_diffusivity_eff),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(MaterialError::InvalidMaterial(format!(
                    "{name} must be finite and >= 0"
                )));
            }
        }
        if !(self.evaporation_constant > 0.0) {
            return Err(MaterialError::InvalidMaterial(
                "evaporation constant must be > 0".into(),
            ));
        }
        if !(self.latent_heat > 0.0) {
            return Err(MaterialError::InvalidMaterial("latent heat must be > 0".into()));
        }
        self.rel_perm.validate()?;
        self.capillary_diffusivity.validate()?;
        self.water_activity.validate()?;
        Ok(())
    }

    /// Maximum water concentration `phi * rho_w`, kg/m^3.
    pub fn water_capacity(&self) -> f64 {
        self.porosity * self.water.reference_density()
    }

    /// Water and gas saturations from the water concentration.
    ///
    /// `S_w = c_w / (phi rho_w)`, `S_g = 1 - S_w`; both in [0, 1] and
    /// summing to one.
    pub fn saturations(&self, water_conc: f64) -> Result<(f64, f64), MaterialError> {
        let max = self.water_capacity();
        if !water_conc.is_finite() || water_conc < 0.0 || water_conc > max {
            return Err(MaterialError::WaterConcentrationOutOfRange {
                value: water_conc,
                max,
                cell: None,
            });
        }
        let s_w = water_conc / max;
        Ok((s_w, 1.0 - s_w))
    }

    /// Saturations clamped to `[eps, 1-eps]` for flux and evaporation
    /// evaluation; tolerates slightly out-of-range Newton iterates.
    pub fn saturations_clamped(&self, water_conc: f64) -> (f64, f64) {
        let s_w = (water_conc / self.water_capacity())
            .clamp(SATURATION_EPSILON, 1.0 - SATURATION_EPSILON);
        (s_w, 1.0 - s_w)
    }

    pub fn water_activity(&self, water_conc: f64, _temperature: f64) -> f64 {
        let s_w = (water_conc / self.water_capacity()).clamp(0.0, 1.0);
        self.water_activity.eval(s_w)
    }

    pub fn capillary_diffusivity(&self, water_conc: f64, _temperature: f64) -> f64 {
        let s_w = (water_conc / self.water_capacity()).clamp(0.0, 1.0);
        self.capillary_diffusivity.eval(s_w)
    }

    /// Gas-phase composition at a local state.
    ///
    /// Uses the clamped gas saturation so the decomposition stays defined
    /// as `S_g -> 0`. The air partial pressure is floored at zero for
    /// vapor-rich states.
    pub fn gas_mixture(&self, state: &LocalState) -> GasMixture {
        let (_, s_g) = self.saturations_clamped(state.water_conc);
        let t = state.temperature;
        let rho_vapor = (state.vapor_conc / (s_g * self.porosity)).max(0.0);
        let m_v = self.vapor.molar_mass();
        let m_a = self.gas.molar_mass();
        let p_vapor = rho_vapor * GAS_CONSTANT * t / m_v;
        let p_air = (state.pressure - p_vapor).max(0.0);
        let rho_air = p_air * m_a / (GAS_CONSTANT * t);
        let rho_gas = rho_air + rho_vapor;
        let omega_vapor = if rho_gas > 0.0 { rho_vapor / rho_gas } else { 0.0 };
        let molar_mass = if rho_gas > 0.0 {
            rho_gas * GAS_CONSTANT * t / state.pressure
        } else {
            m_a
        };
        GasMixture { rho_vapor, rho_air, rho_gas, omega_vapor, molar_mass }
    }

    /// Equilibrium vapor density `a_w(c_w, T) p_sat(T) M_v / (R T)`.
    pub fn equilibrium_vapor_density(
        &self,
        temperature: f64,
        water_conc: f64,
    ) -> Result<f64, MaterialError> {
        let p_sat = saturation_pressure(temperature)?;
        let a_w = self.water_activity(water_conc, temperature);
        Ok(a_w * p_sat * self.vapor.molar_mass() / (GAS_CONSTANT * temperature))
    }

    /// Non-equilibrium volumetric evaporation rate, kg/(m^3 s).
    ///
    /// `I = K_evap (rho_v,equ - rho_v) S_g phi` with
    /// `rho_v = c_v / (S_g phi)`. Positive for evaporation, negative for
    /// condensation; zero when no gas space is left.
    pub fn evaporation_rate(&self, state: &LocalState) -> Result<f64, MaterialError> {
        if state.water_conc >= self.water_capacity() {
            return Ok(0.0);
        }
        let (_, s_g) = self.saturations_clamped(state.water_conc);
        let pore_gas = s_g * self.porosity;
        let rho_v = state.vapor_conc / pore_gas;
        let rho_v_equ = self.equilibrium_vapor_density(state.temperature, state.water_conc)?;
        Ok(self.evaporation_constant * (rho_v_equ - rho_v) * pore_gas)
    }

    /// Volume-weighted effective heat capacity and conductivity:
    /// `(rho c_p)_eff` in J/(m^3 K) and `k_eff` in W/(m K).
    pub fn effective_properties(&self, state: &LocalState) -> (f64, f64) {
        let (s_w, s_g) = self.saturations_clamped(state.water_conc);
        let phi = self.porosity;
        let rho_g = self.gas_mixture(state).rho_gas;
        let rho_w = self.water.reference_density();
        let rho_s = self.solid.reference_density();
        let rho_cp = rho_s * (1.0 - phi) * self.solid.specific_heat
            + rho_g * s_g * phi * self.gas.specific_heat
            + rho_w * s_w * phi * self.water.specific_heat;
        let k_eff = self.solid.thermal_conductivity * (1.0 - phi)
            + self.gas.thermal_conductivity * s_g * phi
            + self.water.thermal_conductivity * s_w * phi;
        (rho_cp, k_eff)
    }

    /// Gas Darcy mobility `k_g0 k_rg(S_w) / mu_g`, m^2/(Pa s).
    pub fn gas_mobility(&self, s_w: f64) -> f64 {
        self.permeability_gas * self.rel_perm.gas(s_w) / self.gas.dynamic_viscosity
    }

    /// Water Darcy mobility `k_w0 k_rw(S_w) / mu_w`, m^2/(Pa s).
    pub fn water_mobility(&self, s_w: f64) -> f64 {
        self.permeability_water * self.rel_perm.water(s_w) / self.water.dynamic_viscosity
    }
}

/// Ideal-gas density `rho = p M / (R T)`, kg/m^3.
pub fn gas_density(pressure: f64, temperature: f64, molar_mass: f64) -> Result<f64, MaterialError> {
    if !(pressure > 0.0) || !pressure.is_finite() {
        return Err(MaterialError::NonpositivePressure(pressure));
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(MaterialError::NonpositiveTemperature(temperature));
    }
    Ok(pressure * molar_mass / (GAS_CONSTANT * temperature))
}

/// Valid temperature range of [`saturation_pressure`], K.
pub const SATURATION_T_MIN: f64 = 273.15;
pub const SATURATION_T_MAX: f64 = 500.0;

/// Clausius-Clapeyron slope constant `lambda M_v / R` of the saturation
/// curve, K. Chosen so the curve stays within 5 % of steam-table values
/// across 273-373 K while passing exactly through the boiling anchor.
const SATURATION_SLOPE_K: f64 = 5180.0;

/// Vapor saturation pressure over pure water, Pa.
///
/// Clausius-Clapeyron exponential anchored at (373.15 K, 101325 Pa);
/// monotone and smooth on [273.15, 500] K.
pub fn saturation_pressure(temperature: f64) -> Result<f64, MaterialError> {
    if !temperature.is_finite()
        || temperature < SATURATION_T_MIN
        || temperature > SATURATION_T_MAX
    {
        return Err(MaterialError::SaturationPressureDomain(
            temperature,
            SATURATION_T_MIN,
            SATURATION_T_MAX,
        ));
    }
    Ok(101_325.0 * (-SATURATION_SLOPE_K * (1.0 / temperature - 1.0 / 373.15)).exp())
}

/// Saturation pressure extended constantly outside its domain; used inside
/// solver residuals so intermediate Newton iterates stay evaluable.
pub(crate) fn saturation_pressure_clamped(temperature: f64) -> f64 {
    let t = temperature.clamp(SATURATION_T_MIN, SATURATION_T_MAX);
    101_325.0 * (-SATURATION_SLOPE_K * (1.0 / t - 1.0 / 373.15)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::test_material;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn with_fixed_activity(a_w: f64) -> FoodMaterial {
        let mut m = test_material();
        m.water_activity =
            ActivityCurve::Table(BreakpointTable { x: vec![0.0, 1.0], y: vec![a_w, a_w] });
        m
    }

    #[test]
    fn material_validates() {
        test_material().validate().unwrap();
    }

    #[test]
    fn saturations_direct_substitution() {
        let m = test_material();
        let (s_w, s_g) = m.saturations(375.0).unwrap();
        assert_eq!(s_w, 0.5);
        assert_eq!(s_g, 0.5);
    }

    #[test]
    fn saturations_dry_and_saturated_limits() {
        let m = test_material();
        assert_eq!(m.saturations(0.0).unwrap(), (0.0, 1.0));
        assert_eq!(m.saturations(750.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn saturations_out_of_range_names_value() {
        let m = test_material();
        let err = m.saturations(751.0).unwrap_err();
        assert!(err.to_string().contains("751"));
        assert!(m.saturations(-1.0).is_err());
    }

    #[test]
    fn saturation_closure_to_machine_precision() {
        let m = test_material();
        for i in 0..=1000 {
            let c_w = 750.0 * i as f64 / 1000.0;
            let (s_w, s_g) = m.saturations(c_w).unwrap();
            assert_eq!(s_w + s_g, 1.0);
        }
    }

    #[test]
    fn gas_density_arithmetic() {
        let rho = gas_density(101_325.0, 293.15, 0.0289).unwrap();
        assert_abs_diff_eq!(rho, 1.2014, epsilon = 1e-4);
    }

    #[test]
    fn gas_density_halves_when_temperature_doubles() {
        let rho = gas_density(101_325.0, 293.15, 0.0289).unwrap();
        let rho2 = gas_density(101_325.0, 2.0 * 293.15, 0.0289).unwrap();
        assert_relative_eq!(rho2, rho / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gas_density_domain_errors() {
        assert!(gas_density(0.0, 300.0, 0.029).is_err());
        assert!(gas_density(1.0e5, 0.0, 0.029).is_err());
        assert!(gas_density(1.0e5, -3.0, 0.029).is_err());
    }

    #[test]
    fn saturation_pressure_boiling_anchor_exact() {
        assert_eq!(saturation_pressure(373.15).unwrap(), 101_325.0);
    }

    #[test]
    fn saturation_pressure_steam_table_cross_checks() {
        // Steam-table references: 12350 Pa at 323.15 K, 611.7 Pa at the
        // triple point; the correlation must stay within 5 %.
        let p50 = saturation_pressure(323.15).unwrap();
        assert!((p50 - 12_350.0).abs() / 12_350.0 < 0.05, "p_sat(323.15) = {p50}");
        let p0 = saturation_pressure(273.16).unwrap();
        assert!((p0 - 611.0).abs() / 611.0 < 0.05, "p_sat(273.16) = {p0}");
    }

    #[test]
    fn saturation_pressure_monotone_and_domain_checked() {
        let mut prev = 0.0;
        for i in 0..=200 {
            let t = SATURATION_T_MIN + (SATURATION_T_MAX - SATURATION_T_MIN) * i as f64 / 200.0;
            let p = saturation_pressure(t).unwrap();
            assert!(p > prev);
            prev = p;
        }
        assert!(saturation_pressure(272.0).is_err());
        assert!(saturation_pressure(501.0).is_err());
    }

    #[test]
    fn equilibrium_vapor_density_arithmetic() {
        let mut m = with_fixed_activity(1.0);
        m.vapor.molar_mass = Some(0.018);
        let rho = m.equilibrium_vapor_density(373.15, 375.0).unwrap();
        assert_abs_diff_eq!(rho, 0.5879, epsilon = 1e-3);
    }

    #[test]
    fn equilibrium_vapor_density_zero_when_water_fully_bound() {
        let m = with_fixed_activity(0.0);
        assert_eq!(m.equilibrium_vapor_density(373.15, 375.0).unwrap(), 0.0);
    }

    #[test]
    fn equilibrium_vapor_density_linear_in_activity() {
        let full = with_fixed_activity(1.0).equilibrium_vapor_density(350.0, 375.0).unwrap();
        let half = with_fixed_activity(0.5).equilibrium_vapor_density(350.0, 375.0).unwrap();
        assert_relative_eq!(half, full / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn equilibrium_vapor_density_monotone_in_temperature() {
        let m = with_fixed_activity(1.0);
        let mut prev = 0.0;
        for i in 0..=100 {
            let t = 280.0 + 2.0 * i as f64;
            let rho = m.equilibrium_vapor_density(t, 375.0).unwrap();
            assert!(rho > prev, "not monotone at {t} K");
            prev = rho;
        }
    }

    #[test]
    fn evaporation_rate_zero_at_equilibrium() {
        let m = test_material();
        let t = 350.0;
        let c_w = 375.0;
        let rho_equ = m.equilibrium_vapor_density(t, c_w).unwrap();
        let state = LocalState {
            temperature: t,
            pressure: 101_325.0,
            vapor_conc: rho_equ * 0.5 * 0.75,
            water_conc: c_w,
        };
        assert_abs_diff_eq!(m.evaporation_rate(&state).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn evaporation_rate_arithmetic() {
        // K = 1000, (rho_equ - rho_v) = 0.1, S_g = 0.5, phi = 0.75.
        let m = test_material();
        let t = 350.0;
        let c_w = 375.0;
        let rho_equ = m.equilibrium_vapor_density(t, c_w).unwrap();
        let state = LocalState {
            temperature: t,
            pressure: 101_325.0,
            vapor_conc: (rho_equ - 0.1) * 0.5 * 0.75,
            water_conc: c_w,
        };
        assert_relative_eq!(m.evaporation_rate(&state).unwrap(), 37.5, max_relative = 1e-9);
    }

    #[test]
    fn evaporation_rate_negative_for_condensation() {
        let m = test_material();
        let t = 350.0;
        let c_w = 375.0;
        let rho_equ = m.equilibrium_vapor_density(t, c_w).unwrap();
        let state = LocalState {
            temperature: t,
            pressure: 101_325.0,
            vapor_conc: (rho_equ + 0.2) * 0.5 * 0.75,
            water_conc: c_w,
        };
        assert!(m.evaporation_rate(&state).unwrap() < 0.0);
    }

    #[test]
    fn evaporation_rate_zero_without_gas_space() {
        let m = test_material();
        let state = LocalState {
            temperature: 350.0,
            pressure: 101_325.0,
            vapor_conc: 0.0,
            water_conc: 750.0,
        };
        assert_eq!(m.evaporation_rate(&state).unwrap(), 0.0);
    }

    #[test]
    fn evaporation_rate_lipschitz_constant_is_k_evap() {
        // d(I)/d(c_v) = -K_evap exactly: the pore-volume factors cancel.
        let m = test_material();
        let base = LocalState {
            temperature: 360.0,
            pressure: 101_325.0,
            vapor_conc: 0.05,
            water_conc: 300.0,
        };
        let h = 1e-6;
        let up = LocalState { vapor_conc: base.vapor_conc + h, ..base };
        let d = (m.evaporation_rate(&up).unwrap() - m.evaporation_rate(&base).unwrap()) / h;
        assert_relative_eq!(d, -m.evaporation_constant, max_relative = 1e-6);
    }

    #[test]
    fn effective_conductivity_dry_limit() {
        let m = test_material();
        let state = LocalState {
            temperature: 293.15,
            pressure: 101_325.0,
            vapor_conc: 0.0,
            water_conc: 0.0,
        };
        let (_, k_eff) = m.effective_properties(&state);
        assert_abs_diff_eq!(k_eff, 0.0695, epsilon = 1e-6);
    }

    #[test]
    fn effective_conductivity_wet_limit() {
        let m = test_material();
        let state = LocalState {
            temperature: 293.15,
            pressure: 101_325.0,
            vapor_conc: 0.0,
            water_conc: 750.0,
        };
        let (_, k_eff) = m.effective_properties(&state);
        assert_abs_diff_eq!(k_eff, 0.4775, epsilon = 1e-6);
    }

    #[test]
    fn effective_conductivity_affine_in_saturation() {
        let m = test_material();
        let k_at = |c_w: f64| {
            let state = LocalState {
                temperature: 293.15,
                pressure: 101_325.0,
                vapor_conc: 0.0,
                water_conc: c_w,
            };
            m.effective_properties(&state).1
        };
        let k0 = k_at(0.0);
        let k1 = k_at(750.0);
        for i in 1..10 {
            let s = i as f64 / 10.0;
            assert_relative_eq!(k_at(750.0 * s), k0 + s * (k1 - k0), max_relative = 1e-4);
        }
    }

    #[test]
    fn effective_properties_monotone_in_saturation() {
        let m = test_material();
        let mut prev = (0.0, 0.0);
        for i in 0..=20 {
            let c_w = 750.0 * i as f64 / 20.0;
            let state = LocalState {
                temperature: 320.0,
                pressure: 101_325.0,
                vapor_conc: 0.01,
                water_conc: c_w,
            };
            let props = m.effective_properties(&state);
            if i > 0 {
                assert!(props.0 > prev.0);
                assert!(props.1 > prev.1);
            }
            prev = props;
        }
    }

    #[test]
    fn gas_mixture_recovers_pure_air() {
        let m = test_material();
        let state = LocalState {
            temperature: 293.15,
            pressure: 101_325.0,
            vapor_conc: 0.0,
            water_conc: 375.0,
        };
        let mix = m.gas_mixture(&state);
        assert_eq!(mix.rho_vapor, 0.0);
        assert_relative_eq!(mix.molar_mass, 0.028966, max_relative = 1e-12);
        let rho_air = gas_density(101_325.0, 293.15, 0.028966).unwrap();
        assert_relative_eq!(mix.rho_gas, rho_air, max_relative = 1e-12);
    }

    #[test]
    fn gas_mixture_molar_mass_between_components() {
        let m = test_material();
        let state = LocalState {
            temperature: 350.0,
            pressure: 101_325.0,
            vapor_conc: 0.05,
            water_conc: 375.0,
        };
        let mix = m.gas_mixture(&state);
        assert!(mix.molar_mass > 0.018016 && mix.molar_mass < 0.028966);
        assert!(mix.omega_vapor > 0.0 && mix.omega_vapor < 1.0);
        assert_relative_eq!(mix.rho_gas, mix.rho_air + mix.rho_vapor, max_relative = 1e-14);
    }
}
