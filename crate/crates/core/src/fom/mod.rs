//! Full-order model: finite-volume, method-of-lines solver for the coupled
//! gas/vapor/water/energy transport on a 1-D grid.
//!
//! Per-cell unknowns are (T, p, c_v, c_w); the total-gas balance closes
//! the pressure through the ideal-gas law. Space: finite volumes with
//! harmonic-mean face coefficients, upwinded Darcy mass fluxes and
//! convective enthalpy, central diffusive terms. Time: backward Euler with
//! damped Newton and step-doubling error control.

mod convergence;
mod flux;
mod grid;
mod linalg;
mod solver;
mod state;

pub use convergence::{grid_convergence, ConvergenceStudy};
pub use flux::{boundary_fluxes, interior_fluxes, pore_reynolds, BoundaryFluxes, FaceFlux};
pub use grid::Grid1D;
pub use solver::{
    simulate, step, surface_temperature, total_moisture, ProbeSample, Trajectory,
};
pub use state::{BoundarySpec, FieldState, SolveConfig};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::LocalState;
    use crate::signal::Forcing;
    use crate::testutil::test_material;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn equilibrium_local(material: &crate::material::FoodMaterial) -> LocalState {
        let t = 293.15;
        let c_w = 375.0;
        let rho_v_equ = material.equilibrium_vapor_density(t, c_w).unwrap();
        LocalState {
            temperature: t,
            pressure: 101_325.0,
            vapor_conc: rho_v_equ * 0.5 * 0.75,
            water_conc: c_w,
        }
    }

    fn insulated_bc() -> BoundarySpec {
        BoundarySpec {
            heat_transfer_coeff: 0.0,
            mass_transfer_coeff: 0.0,
            ambient_pressure: 101_325.0,
            oven_temperature: Forcing::Constant(293.15),
            oven_vapor_density: Forcing::Constant(0.0),
        }
    }

    #[test]
    fn insulated_uniform_state_is_steady_for_any_dt() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 10).unwrap();
        let init = FieldState::uniform(10, equilibrium_local(&m));
        let cfg = SolveConfig::default();
        for dt in [0.01, 1.0, 5.0] {
            let next = step(&init, dt, &grid, &insulated_bc(), &m, &cfg).unwrap();
            for i in 0..10 {
                assert_abs_diff_eq!(next.temperature[i], 293.15, epsilon = 1e-6);
                assert_abs_diff_eq!(next.water_conc[i], 375.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn full_equilibrium_boundary_keeps_state_unchanged() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 10).unwrap();
        let local = equilibrium_local(&m);
        let rho_v = local.vapor_conc / (0.5 * 0.75);
        let bc = BoundarySpec {
            heat_transfer_coeff: 20.0,
            mass_transfer_coeff: 0.01,
            ambient_pressure: 101_325.0,
            oven_temperature: Forcing::Constant(local.temperature),
            oven_vapor_density: Forcing::Constant(rho_v),
        };
        let init = FieldState::uniform(10, local);
        let next = step(&init, 1.0, &grid, &bc, &m, &SolveConfig::default()).unwrap();
        for i in 0..10 {
            assert_abs_diff_eq!(next.temperature[i], local.temperature, epsilon = 1e-6);
            assert_abs_diff_eq!(next.pressure[i], local.pressure, epsilon = 1e-3);
            assert_abs_diff_eq!(next.water_conc[i], local.water_conc, epsilon = 1e-6);
        }
    }

    #[test]
    fn benchmark_step_heats_surface_and_dries_it() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 10).unwrap();
        let local = LocalState {
            temperature: 293.15,
            pressure: 101_325.0,
            vapor_conc: 0.17 * 0.018016,
            water_conc: 375.0,
        };
        let bc = BoundarySpec {
            heat_transfer_coeff: 20.0,
            mass_transfer_coeff: 0.01,
            ambient_pressure: 101_325.0,
            oven_temperature: Forcing::Constant(450.15),
            oven_vapor_density: Forcing::Constant(0.0),
        };
        let mut state = FieldState::uniform(10, local);
        let cfg = SolveConfig::default();
        let mut prev_t_surf = state.temperature[0];
        let mut prev_c_w = state.water_conc[0];
        for _ in 0..5 {
            state = step(&state, 1.0, &grid, &bc, &m, &cfg).unwrap();
            assert!(state.temperature[0] > prev_t_surf, "surface must keep heating");
            assert!(state.water_conc[0] < prev_c_w, "surface must keep drying");
            prev_t_surf = state.temperature[0];
            prev_c_w = state.water_conc[0];
        }
    }

    #[test]
    fn total_moisture_examples() {
        let grid = Grid1D::uniform(0.01, 5).unwrap();
        let mut state = FieldState::uniform(
            5,
            LocalState {
                temperature: 293.15,
                pressure: 101_325.0,
                vapor_conc: 0.0,
                water_conc: 375.0,
            },
        );
        assert_relative_eq!(total_moisture(&state, &grid), 3.75, max_relative = 1e-12);

        let halved: Vec<f64> = state.water_conc.iter().map(|c| c / 2.0).collect();
        state.water_conc = halved;
        assert_relative_eq!(total_moisture(&state, &grid), 1.875, max_relative = 1e-12);

        state.water_conc = vec![0.0; 5];
        state.vapor_conc = vec![0.0; 5];
        assert_eq!(total_moisture(&state, &grid), 0.0);
    }

    #[test]
    fn simulate_emits_samples_at_output_interval() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 8).unwrap();
        let init = FieldState::uniform(8, equilibrium_local(&m));
        let cfg = SolveConfig { output_interval: 2.0, ..Default::default() };
        let traj = simulate(&init, &grid, &insulated_bc(), &m, &cfg, 10.0, true).unwrap();
        let times = traj.probe_times();
        assert_eq!(times.len(), 6);
        for (k, t) in times.iter().enumerate() {
            assert_abs_diff_eq!(*t, 2.0 * k as f64, epsilon = 1e-9);
        }
        assert_eq!(traj.states.len(), 6);
        assert_eq!(traj.probes[0].surface_pressure, 101_325.0);
    }

    #[test]
    fn simulate_rejects_short_forcing() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 8).unwrap();
        let init = FieldState::uniform(8, equilibrium_local(&m));
        let mut bc = insulated_bc();
        bc.oven_temperature =
            Forcing::Sampled(crate::signal::Signal::new(1.0, vec![300.0, 300.0]).unwrap());
        let err = simulate(&init, &grid, &bc, &m, &SolveConfig::default(), 10.0, false);
        assert!(err.is_err());
    }
}
