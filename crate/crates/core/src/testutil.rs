//! Shared fixtures for unit tests.

use crate::material::{
    ActivityCurve, CapillaryCurve, DensityModel, FoodMaterial, PhaseProperties, RelPermCurves,
};

/// Potato-like benchmark material used across unit tests; mirrors the
/// shipped default material file.
pub(crate) fn test_material() -> FoodMaterial {
    FoodMaterial {
        porosity: 0.75,
        solid: PhaseProperties {
            density: DensityModel::Constant(1450.0),
            dynamic_viscosity: 1.0,
            specific_heat: 1650.0,
            thermal_conductivity: 0.2,
            molar_mass: None,
        },
        water: PhaseProperties {
            density: DensityModel::Constant(1000.0),
            dynamic_viscosity: 5.5e-4,
            specific_heat: 4180.0,
            thermal_conductivity: 0.57,
            molar_mass: Some(0.018016),
        },
        gas: PhaseProperties {
            density: DensityModel::IdealGas,
            dynamic_viscosity: 1.8e-5,
            specific_heat: 1006.0,
            thermal_conductivity: 0.026,
            molar_mass: Some(0.028966),
        },
        vapor: PhaseProperties {
            density: DensityModel::IdealGas,
            dynamic_viscosity: 1.0e-5,
            specific_heat: 1900.0,
            thermal_conductivity: 0.025,
            molar_mass: Some(0.018016),
        },
        permeability_gas: 1.0e-13,
        permeability_water: 5.0e-14,
        rel_perm: RelPermCurves::default(),
        capillary_diffusivity: CapillaryCurve::Constant { value: 1.0e-8 },
        gas_diffusivity_eff: 2.6e-6,
        water_activity: ActivityCurve::Exponential { shape: 10.0 },
        evaporation_constant: 1000.0,
        latent_heat: 2.26e6,
    }
}
