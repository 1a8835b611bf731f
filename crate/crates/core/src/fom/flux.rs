//! Face fluxes of the coupled transport system.
//!
//! Sign convention: fluxes are positive in +y (from the surface toward the
//! insulated bottom). Harmonic means are used for face conductivities and
//! mobilities; Darcy mass fluxes upwind the transported density.

use crate::error::{SignalError, SolverError};
use crate::fom::grid::Grid1D;
use crate::fom::state::{BoundarySpec, FieldState};
use crate::material::{FoodMaterial, LocalState};

/// Derived quantities of one cell, evaluated with clamped saturations.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CellProps {
    pub s_w: f64,
    pub s_g: f64,
    /// Gas density of the vapor/air mixture, kg/m^3.
    pub rho_g: f64,
    /// Vapor partial density within the gas, kg/m^3.
    pub rho_v: f64,
    /// Vapor mass fraction.
    pub omega_v: f64,
    /// Gas concentration per total volume, kg/m^3.
    pub c_g: f64,
    /// Darcy mobilities k / mu, m^2/(Pa s).
    pub mob_g: f64,
    pub mob_w: f64,
    /// Binary-diffusion coefficient `phi S_g rho_g D_eff`, kg/(m s).
    pub d_vap: f64,
    /// Capillary diffusivity, m^2/s.
    pub d_cap: f64,
    pub k_eff: f64,
    pub rho_cp: f64,
    /// Volumetric evaporation rate, kg/(m^3 s).
    pub evap: f64,
}

impl CellProps {
    /// Evaluates all derived quantities. Tolerates out-of-range Newton
    /// iterates: saturations are clamped, the saturation-pressure curve is
    /// extended constantly outside its temperature domain, and partial
    /// densities are floored at zero inside the mixture split.
    pub(crate) fn evaluate(material: &FoodMaterial, state: &LocalState) -> CellProps {
        let phi = material.porosity;
        let (s_w, s_g) = material.saturations_clamped(state.water_conc);
        let mix = material.gas_mixture(state);
        let c_g = s_g * phi * mix.rho_gas;

        let p_sat = crate::material::saturation_pressure_clamped(state.temperature);
        let a_w = material.water_activity(state.water_conc, state.temperature);
        let rho_v_equ = a_w * p_sat * material.vapor.molar_mass()
            / (crate::material::GAS_CONSTANT * state.temperature.max(1.0));
        let evap = if state.water_conc >= material.water_capacity() {
            0.0
        } else {
            material.evaporation_constant * (rho_v_equ - state.vapor_conc / (s_g * phi)) * s_g * phi
        };

        let (rho_cp, k_eff) = material.effective_properties(state);

        CellProps {
            s_w,
            s_g,
            rho_g: mix.rho_gas,
            rho_v: state.vapor_conc / (s_g * phi),
            omega_v: mix.omega_vapor,
            c_g,
            mob_g: material.gas_mobility(s_w),
            mob_w: material.water_mobility(s_w),
            d_vap: phi * s_g * mix.rho_gas * material.gas_diffusivity_eff,
            d_cap: material.capillary_diffusivity(state.water_conc, state.temperature),
            k_eff,
            rho_cp,
            evap,
        }
    }
}

/// Mass and heat fluxes through one face, positive in +y.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaceFlux {
    /// Total gas (air + vapor) Darcy flux, kg/(m^2 s).
    pub gas: f64,
    /// Vapor flux: Darcy transport plus binary diffusion, kg/(m^2 s).
    pub vapor: f64,
    /// Liquid-water flux: Darcy transport plus capillary diffusion,
    /// kg/(m^2 s).
    pub water: f64,
    /// Conductive heat flux, W/m^2.
    pub heat: f64,
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

/// Flux through the face between two adjacent cells whose centers are
/// `spacing` apart (left cell toward the surface).
pub(crate) fn face_flux(
    left: (&LocalState, &CellProps),
    right: (&LocalState, &CellProps),
    spacing: f64,
    material: &FoodMaterial,
) -> FaceFlux {
    let (sl, pl) = left;
    let (sr, pr) = right;
    let grad_p = (sr.pressure - sl.pressure) / spacing;

    // Darcy flow runs down the pressure gradient; the donor cell supplies
    // the transported density.
    let mob_g = harmonic(pl.mob_g, pr.mob_g);
    let mob_w = harmonic(pl.mob_w, pr.mob_w);
    let (rho_g_up, rho_v_up) =
        if grad_p <= 0.0 { (pl.rho_g, pl.rho_v) } else { (pr.rho_g, pr.rho_v) };
    let gas = -rho_g_up.max(0.0) * mob_g * grad_p;
    let vapor_darcy = -rho_v_up.max(0.0) * mob_g * grad_p;

    let vapor_diff = -harmonic(pl.d_vap, pr.d_vap) * (pr.omega_v - pl.omega_v) / spacing;

    let rho_w = material.water.reference_density();
    let water_darcy = -rho_w * mob_w * grad_p;
    let water_cap =
        -harmonic(pl.d_cap, pr.d_cap) * (sr.water_conc - sl.water_conc) / spacing;

    let heat = -harmonic(pl.k_eff, pr.k_eff) * (sr.temperature - sl.temperature) / spacing;

    FaceFlux { gas, vapor: vapor_darcy + vapor_diff, water: water_darcy + water_cap, heat }
}

/// Boundary exchange with the oven atmosphere at the surface (y = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFluxes {
    /// Vapor mass flux, positive out of the food, kg/(m^2 s).
    pub vapor_out: f64,
    /// Surface-evaporating liquid water, positive out, kg/(m^2 s).
    pub water_out: f64,
    /// Heat flux, positive into the food, W/m^2.
    pub heat_in: f64,
    /// Dirichlet pressure imposed at the surface face, Pa.
    pub surface_pressure: f64,
}

/// Convective/evaporative surface exchange evaluated at a surface state.
///
/// `j_v = h_m phi S_g (rho_v - rho_v,oven)`,
/// `j_w = h_m phi S_w (rho_v - rho_v,oven)`,
/// `q_in = h_T (T_oven - T) - lambda j_w`, so surface evaporation
/// subtracts from the convective heating. The bottom face (y = L) carries
/// zero flux throughout.
pub fn boundary_fluxes(
    surface: &LocalState,
    bc: &BoundarySpec,
    t: f64,
    material: &FoodMaterial,
) -> Result<BoundaryFluxes, SignalError> {
    let t_oven = bc.oven_temperature.value_at(t)?;
    let rho_v_oven = bc.oven_vapor_density.value_at(t)?;
    let (s_w, s_g) = material.saturations_clamped(surface.water_conc);
    let rho_v = surface.vapor_conc / (s_g * material.porosity);
    let deficit = rho_v - rho_v_oven;
    let h_m = bc.mass_transfer_coeff;
    let vapor_out = h_m * material.porosity * s_g * deficit;
    let water_out = h_m * material.porosity * s_w * deficit;
    let heat_in =
        bc.heat_transfer_coeff * (t_oven - surface.temperature) - material.latent_heat * water_out;
    Ok(BoundaryFluxes { vapor_out, water_out, heat_in, surface_pressure: bc.ambient_pressure })
}

/// All interior face fluxes of a field state (faces 1 .. n-1).
///
/// Any non-finite flux is reported with the index of the cell left of the
/// offending face.
pub fn interior_fluxes(
    state: &FieldState,
    grid: &Grid1D,
    material: &FoodMaterial,
) -> Result<Vec<FaceFlux>, SolverError> {
    let n = grid.n_cells();
    let props: Vec<CellProps> =
        (0..n).map(|i| CellProps::evaluate(material, &state.local(i))).collect();
    let mut fluxes = Vec::with_capacity(n - 1);
    for f in 1..n {
        let l = f - 1;
        let local_l = state.local(l);
        let local_r = state.local(f);
        let flux =
            face_flux((&local_l, &props[l]), (&local_r, &props[f]), grid.center_spacing(l), material);
        for (name, v) in [
            ("gas flux", flux.gas),
            ("vapor flux", flux.vapor),
            ("water flux", flux.water),
            ("heat flux", flux.heat),
        ] {
            if !v.is_finite() {
                return Err(SolverError::NonFinite { quantity: name.into(), cell: l });
            }
        }
        fluxes.push(flux);
    }
    Ok(fluxes)
}

/// Pore Reynolds number diagnostic `|j| d_pore / mu` for a Darcy mass
/// flux; Darcy's law is considered valid below roughly 1-10.
pub fn pore_reynolds(mass_flux: f64, pore_diameter: f64, viscosity: f64) -> f64 {
    mass_flux.abs() * pore_diameter / viscosity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Forcing;
    use crate::testutil::test_material;
    use approx::assert_relative_eq;

    fn uniform_state(n: usize) -> FieldState {
        FieldState::uniform(
            n,
            LocalState {
                temperature: 330.0,
                pressure: 101_325.0,
                vapor_conc: 0.02,
                water_conc: 375.0,
            },
        )
    }

    fn bc(t_oven: f64, rho_v_oven: f64) -> BoundarySpec {
        BoundarySpec {
            heat_transfer_coeff: 20.0,
            mass_transfer_coeff: 0.01,
            ambient_pressure: 101_325.0,
            oven_temperature: Forcing::Constant(t_oven),
            oven_vapor_density: Forcing::Constant(rho_v_oven),
        }
    }

    #[test]
    fn uniform_state_has_zero_interior_fluxes() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 8).unwrap();
        let state = uniform_state(8);
        for flux in interior_fluxes(&state, &grid, &m).unwrap() {
            assert_eq!(flux, FaceFlux::default());
        }
    }

    #[test]
    fn darcy_fluxes_point_from_high_to_low_pressure() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 3).unwrap();
        let mut state = uniform_state(3);
        state.pressure = vec![102_000.0, 101_500.0, 101_000.0];
        let fluxes = interior_fluxes(&state, &grid, &m).unwrap();
        for f in &fluxes {
            assert!(f.gas > 0.0, "gas should flow toward lower pressure (+y)");
            assert!(f.vapor > 0.0);
            assert!(f.water > 0.0);
        }
        // Reversed gradient flips the sign.
        state.pressure = vec![101_000.0, 101_500.0, 102_000.0];
        for f in interior_fluxes(&state, &grid, &m).unwrap() {
            assert!(f.gas < 0.0);
        }
    }

    #[test]
    fn capillary_flux_runs_from_wet_to_dry() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 3).unwrap();
        let mut state = uniform_state(3);
        state.water_conc = vec![500.0, 375.0, 250.0];
        let fluxes = interior_fluxes(&state, &grid, &m).unwrap();
        for f in &fluxes {
            assert!(f.water > 0.0, "water should diffuse toward the dry side");
        }
    }

    #[test]
    fn conduction_runs_down_the_temperature_gradient() {
        let m = test_material();
        let grid = Grid1D::uniform(0.01, 3).unwrap();
        let mut state = uniform_state(3);
        state.temperature = vec![400.0, 350.0, 300.0];
        for f in interior_fluxes(&state, &grid, &m).unwrap() {
            assert!(f.heat > 0.0);
        }
    }

    #[test]
    fn boundary_equilibrium_with_oven_air() {
        let m = test_material();
        let surface = LocalState {
            temperature: 330.0,
            pressure: 101_325.0,
            vapor_conc: 0.02,
            water_conc: 375.0,
        };
        let rho_v = 0.02 / (0.5 * 0.75);
        let b = boundary_fluxes(&surface, &bc(450.15, rho_v), 0.0, &m).unwrap();
        assert_relative_eq!(b.vapor_out, 0.0, epsilon = 1e-14);
        assert_relative_eq!(b.water_out, 0.0, epsilon = 1e-14);
        assert_relative_eq!(b.heat_in, 20.0 * (450.15 - 330.0), max_relative = 1e-12);
        assert_eq!(b.surface_pressure, 101_325.0);
    }

    #[test]
    fn boundary_vapor_flux_arithmetic() {
        // h_m = 0.01, phi = 0.75, S_g = 0.5, deficit = 0.2 -> 7.5e-4.
        let m = test_material();
        let surface = LocalState {
            temperature: 330.0,
            pressure: 101_325.0,
            vapor_conc: 0.2 * 0.5 * 0.75,
            water_conc: 375.0,
        };
        let b = boundary_fluxes(&surface, &bc(450.15, 0.0), 0.0, &m).unwrap();
        assert_relative_eq!(b.vapor_out, 7.5e-4, max_relative = 1e-12);
    }

    #[test]
    fn insulated_boundary_is_flux_free() {
        let m = test_material();
        let surface = LocalState {
            temperature: 330.0,
            pressure: 101_325.0,
            vapor_conc: 0.05,
            water_conc: 375.0,
        };
        let mut spec = bc(450.15, 0.0);
        spec.heat_transfer_coeff = 0.0;
        spec.mass_transfer_coeff = 0.0;
        let b = boundary_fluxes(&surface, &spec, 0.0, &m).unwrap();
        assert_eq!(b.vapor_out, 0.0);
        assert_eq!(b.water_out, 0.0);
        assert_eq!(b.heat_in, 0.0);
    }

    #[test]
    fn evaporation_subtracts_from_heating() {
        let m = test_material();
        let dry_oven = bc(450.15, 0.0);
        let surface = LocalState {
            temperature: 330.0,
            pressure: 101_325.0,
            vapor_conc: 0.1,
            water_conc: 375.0,
        };
        let b = boundary_fluxes(&surface, &dry_oven, 0.0, &m).unwrap();
        assert!(b.water_out > 0.0);
        assert!(b.heat_in < 20.0 * (450.15 - 330.0));
    }

    #[test]
    fn reynolds_diagnostic_scales_linearly() {
        assert_relative_eq!(pore_reynolds(-2e-3, 1e-4, 1.8e-5), 2e-3 * 1e-4 / 1.8e-5);
    }
}
