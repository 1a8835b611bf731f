//! Field state, boundary specification and solver configuration.

use crate::error::{MaterialError, SolverError};
use crate::fom::grid::Grid1D;
use crate::material::{FoodMaterial, LocalState};
use crate::signal::Forcing;
use serde::{Deserialize, Serialize};

/// Per-cell primary unknowns on a 1-D grid plus the simulation clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    /// Simulation time, s.
    pub time: f64,
    pub temperature: Vec<f64>,
    pub pressure: Vec<f64>,
    pub vapor_conc: Vec<f64>,
    pub water_conc: Vec<f64>,
}

impl FieldState {
    /// Spatially uniform state.
    pub fn uniform(n_cells: usize, local: LocalState) -> Self {
        Self {
            time: 0.0,
            temperature: vec![local.temperature; n_cells],
            pressure: vec![local.pressure; n_cells],
            vapor_conc: vec![local.vapor_conc; n_cells],
            water_conc: vec![local.water_conc; n_cells],
        }
    }

    pub fn n_cells(&self) -> usize {
        self.temperature.len()
    }

    pub fn local(&self, i: usize) -> LocalState {
        LocalState {
            temperature: self.temperature[i],
            pressure: self.pressure[i],
            vapor_conc: self.vapor_conc[i],
            water_conc: self.water_conc[i],
        }
    }

    pub fn validate(&self, material: &FoodMaterial, grid: &Grid1D) -> Result<(), MaterialError> {
        let n = grid.n_cells();
        if self.temperature.len() != n
            || self.pressure.len() != n
            || self.vapor_conc.len() != n
            || self.water_conc.len() != n
        {
            return Err(MaterialError::InvalidState {
                cell: 0,
                reason: format!("field arrays not congruent with grid of {n} cells"),
            });
        }
        for i in 0..n {
            self.local(i).validate(material, i)?;
        }
        Ok(())
    }

    /// Flattens to the Newton unknown vector, cell-major
    /// `[T_0, p_0, c_v0, c_w0, T_1, ...]`.
    pub(crate) fn pack(&self, out: &mut Vec<f64>) {
        out.clear();
        for i in 0..self.n_cells() {
            out.push(self.temperature[i]);
            out.push(self.pressure[i]);
            out.push(self.vapor_conc[i]);
            out.push(self.water_conc[i]);
        }
    }

    pub(crate) fn unpack(&mut self, flat: &[f64]) {
        for i in 0..self.n_cells() {
            self.temperature[i] = flat[4 * i];
            self.pressure[i] = flat[4 * i + 1];
            self.vapor_conc[i] = flat[4 * i + 2];
            self.water_conc[i] = flat[4 * i + 3];
        }
    }

    /// Linear interpolation between two states; `w` in [0, 1].
    pub(crate) fn lerp(a: &FieldState, b: &FieldState, w: f64) -> FieldState {
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(xa, xb)| xa + w * (xb - xa)).collect()
        };
        FieldState {
            time: a.time + w * (b.time - a.time),
            temperature: mix(&a.temperature, &b.temperature),
            pressure: mix(&a.pressure, &b.pressure),
            vapor_conc: mix(&a.vapor_conc, &b.vapor_conc),
            water_conc: mix(&a.water_conc, &b.water_conc),
        }
    }
}

/// Boundary conditions of the surface-exchange problem: Dirichlet pressure
/// plus convective heat/mass exchange with the oven atmosphere at y = 0,
/// zero flux at the bottom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    /// Heat transfer coefficient h_T, W/(m^2 K).
    pub heat_transfer_coeff: f64,
    /// Mass transfer coefficient h_m, m/s.
    pub mass_transfer_coeff: f64,
    /// Ambient pressure (surface Dirichlet value), Pa.
    pub ambient_pressure: f64,
    /// Oven temperature history, K. The excitation channel.
    pub oven_temperature: Forcing,
    /// Oven vapor density, kg/m^3.
    pub oven_vapor_density: Forcing,
}

impl BoundarySpec {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.heat_transfer_coeff >= 0.0) {
            return Err(SolverError::Setup("heat transfer coefficient must be >= 0".into()));
        }
        if !(self.mass_transfer_coeff >= 0.0) {
            return Err(SolverError::Setup("mass transfer coefficient must be >= 0".into()));
        }
        if !(self.ambient_pressure > 0.0) {
            return Err(SolverError::Setup("ambient pressure must be > 0".into()));
        }
        Ok(())
    }
}

/// Time-integration configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Newton convergence: scaled residual relative to the first iterate.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Step-doubling local error control, relative to field scales.
    /// With `dt_min == dt_max` the stepper runs fixed-step and skips the
    /// error control entirely.
    pub step_rtol: f64,
    /// Trajectory/probe sampling interval, s.
    pub output_interval: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            dt_init: 0.1,
            dt_min: 1e-3,
            dt_max: 5.0,
            newton_tol: 1e-8,
            newton_max_iter: 12,
            step_rtol: 1e-4,
            output_interval: 1.0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return Err(SolverError::Setup(format!(
                "time step bounds must satisfy 0 < dt_min <= dt_max, got [{}, {}]",
                self.dt_min, self.dt_max
            )));
        }
        if !(self.dt_init > 0.0) {
            return Err(SolverError::Setup("initial time step must be > 0".into()));
        }
        if !(self.newton_tol > 0.0) || !(self.step_rtol > 0.0) {
            return Err(SolverError::Setup("tolerances must be > 0".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(SolverError::Setup("need at least one Newton iteration".into()));
        }
        if !(self.output_interval > 0.0) {
            return Err(SolverError::Setup("output interval must be > 0".into()));
        }
        Ok(())
    }

    pub fn is_fixed_step(&self) -> bool {
        self.dt_min == self.dt_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_unpack_roundtrip() {
        let local = LocalState {
            temperature: 300.0,
            pressure: 1.0e5,
            vapor_conc: 0.01,
            water_conc: 375.0,
        };
        let mut s = FieldState::uniform(5, local);
        s.temperature[2] = 310.0;
        s.water_conc[4] = 100.0;
        let mut flat = Vec::new();
        s.pack(&mut flat);
        let mut s2 = FieldState::uniform(5, local);
        s2.unpack(&flat);
        s2.time = s.time;
        assert_eq!(s, s2);
    }

    #[test]
    fn config_validation() {
        assert!(SolveConfig::default().validate().is_ok());
        let bad = SolveConfig { dt_min: 1.0, dt_max: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
