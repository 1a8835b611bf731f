//! Configuration files: material definitions, case setups and the
//! end-to-end pipeline document.
//!
//! Every physical quantity carries its unit in the key name
//! (`heat_transfer_coeff_W_per_m2K`), relative paths resolve against the
//! containing file, and validation reports every offending key at once.

use crate::error::ConfigError;
use crate::excite::AprbsSpec;
use crate::fom::{BoundarySpec, FieldState, Grid1D, SolveConfig};
use crate::material::{
    ActivityCurve, CapillaryCurve, DensityModel, FoodMaterial, PhaseProperties, RelPermCurves,
};
use crate::signal::Forcing;
use crate::sysid::FitConfig;
use crate::Error;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const MATERIAL_SCHEMA: &str = "cooktwin-material-v1";
pub const CASE_SCHEMA: &str = "cooktwin-case-v1";
pub const PIPELINE_SCHEMA: &str = "cooktwin-pipeline-v1";
pub const TRAINSET_SCHEMA: &str = "cooktwin-trainset-v1";

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    toml::from_str(&text)
        .map_err(|e| ConfigError::single(path.display().to_string(), e.to_string()).into())
}

fn check_schema(path: &Path, found: &str, expected: &str) -> Result<(), Error> {
    if found != expected {
        return Err(ConfigError::single(
            path.display().to_string(),
            format!("schema = \"{found}\", expected \"{expected}\""),
        )
        .into());
    }
    Ok(())
}

fn resolve(base: &Path, relative: &str) -> PathBuf {
    let p = Path::new(relative);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

// ---------------------------------------------------------------------------
// Material file

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialDoc {
    schema: String,
    porosity: f64,
    permeability_gas_m2: f64,
    permeability_water_m2: f64,
    gas_diffusivity_eff_m2_per_s: f64,
    evaporation_constant_per_s: f64,
    latent_heat_J_per_kg: f64,
    solid: PhaseDoc,
    water: PhaseDoc,
    gas: PhaseDoc,
    vapor: PhaseDoc,
    water_activity: ActivityCurve,
    capillary_diffusivity: CapillaryCurve,
    #[serde(default)]
    relative_permeability: RelPermCurves,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseDoc {
    /// Omitted for ideal-gas phases.
    #[serde(default)]
    density_kg_per_m3: Option<f64>,
    dynamic_viscosity_Pa_s: f64,
    specific_heat_J_per_kgK: f64,
    thermal_conductivity_W_per_mK: f64,
    #[serde(default)]
    molar_mass_kg_per_mol: Option<f64>,
}

impl PhaseDoc {
    fn to_phase(&self) -> PhaseProperties {
        PhaseProperties {
            density: match self.density_kg_per_m3 {
                Some(rho) => DensityModel::Constant(rho),
                None => DensityModel::IdealGas,
            },
            dynamic_viscosity: self.dynamic_viscosity_Pa_s,
            specific_heat: self.specific_heat_J_per_kgK,
            thermal_conductivity: self.thermal_conductivity_W_per_mK,
            molar_mass: self.molar_mass_kg_per_mol,
        }
    }
}

/// Loads and validates a material definition file.
pub fn load_material(path: &Path) -> Result<FoodMaterial, Error> {
    let doc: MaterialDoc = read_toml(path)?;
    check_schema(path, &doc.schema, MATERIAL_SCHEMA)?;
    let material = FoodMaterial {
        porosity: doc.porosity,
        solid: doc.solid.to_phase(),
        water: doc.water.to_phase(),
        gas: doc.gas.to_phase(),
        vapor: doc.vapor.to_phase(),
        permeability_gas: doc.permeability_gas_m2,
        permeability_water: doc.permeability_water_m2,
        rel_perm: doc.relative_permeability,
        capillary_diffusivity: doc.capillary_diffusivity,
        gas_diffusivity_eff: doc.gas_diffusivity_eff_m2_per_s,
        water_activity: doc.water_activity,
        evaporation_constant: doc.evaporation_constant_per_s,
        latent_heat: doc.latent_heat_J_per_kg,
    };
    material
        .validate()
        .map_err(|e| ConfigError::single(path.display().to_string(), e.to_string()))?;
    Ok(material)
}

// ---------------------------------------------------------------------------
// Case file

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    schema: String,
    material: String,
    grid: GridDoc,
    initial: InitialDoc,
    boundary: BoundaryDoc,
    #[serde(default)]
    solver: SolverDoc,
    simulation: SimulationDoc,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    length_m: f64,
    n_cells: usize,
    #[serde(default = "one")]
    growth: f64,
}

fn one() -> f64 {
    1.0
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialDoc {
    temperature_K: f64,
    pressure_Pa: f64,
    water_saturation: f64,
    /// Converted to kg/m^3 through the vapor molar mass at load time.
    vapor_concentration_mol_per_m3: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryDoc {
    heat_transfer_coeff_W_per_m2K: f64,
    mass_transfer_coeff_m_per_s: f64,
    ambient_pressure_Pa: f64,
    oven_vapor_density_kg_per_m3: f64,
    oven_temperature: ForcingDoc,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ForcingDoc {
    Constant { value_K: f64 },
    Csv { path: String },
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverDoc {
    dt_init_s: f64,
    dt_min_s: f64,
    dt_max_s: f64,
    newton_tol: f64,
    newton_max_iter: usize,
    step_rtol: f64,
    output_interval_s: f64,
}

impl Default for SolverDoc {
    fn default() -> Self {
        let d = SolveConfig::default();
        Self {
            dt_init_s: d.dt_init,
            dt_min_s: d.dt_min,
            dt_max_s: d.dt_max,
            newton_tol: d.newton_tol,
            newton_max_iter: d.newton_max_iter,
            step_rtol: d.step_rtol,
            output_interval_s: d.output_interval,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationDoc {
    t_end_s: f64,
}

/// A fully resolved simulation case.
#[derive(Debug, Clone)]
pub struct CaseSetup {
    pub material: FoodMaterial,
    pub grid: Grid1D,
    pub init: FieldState,
    pub bc: BoundarySpec,
    pub solver: SolveConfig,
    pub t_end: f64,
}

impl CaseSetup {
    /// Rebuilds the initial state on a different resolution of the same
    /// case (used by convergence studies).
    pub fn with_resolution(&self, n_cells: usize) -> Result<CaseSetup, Error> {
        let grid = Grid1D::uniform(self.grid.length(), n_cells)?;
        let init = FieldState::uniform(n_cells, self.init.local(0));
        Ok(CaseSetup { grid, init, ..self.clone() })
    }
}

/// Loads a case file plus its referenced material and oven signal.
pub fn load_case(path: &Path) -> Result<CaseSetup, Error> {
    let doc: CaseDoc = read_toml(path)?;
    check_schema(path, &doc.schema, CASE_SCHEMA)?;

    let mut problems = Vec::new();
    let check = |cond: bool, msg: &str, problems: &mut Vec<String>| {
        if !cond {
            problems.push(msg.to_string());
        }
    };
    check(doc.grid.length_m > 0.0, "grid.length_m must be > 0", &mut problems);
    check(doc.grid.n_cells >= 3, "grid.n_cells must be >= 3", &mut problems);
    check(doc.grid.growth > 0.0, "grid.growth must be > 0", &mut problems);
    check(doc.initial.temperature_K > 0.0, "initial.temperature_K must be > 0", &mut problems);
    check(doc.initial.pressure_Pa > 0.0, "initial.pressure_Pa must be > 0", &mut problems);
    check(
        (0.0..=1.0).contains(&doc.initial.water_saturation),
        "initial.water_saturation must be in [0, 1]",
        &mut problems,
    );
    check(
        doc.initial.vapor_concentration_mol_per_m3 >= 0.0,
        "initial.vapor_concentration_mol_per_m3 must be >= 0",
        &mut problems,
    );
    check(
        doc.boundary.heat_transfer_coeff_W_per_m2K >= 0.0,
        "boundary.heat_transfer_coeff_W_per_m2K must be >= 0",
        &mut problems,
    );
    check(
        doc.boundary.mass_transfer_coeff_m_per_s >= 0.0,
        "boundary.mass_transfer_coeff_m_per_s must be >= 0",
        &mut problems,
    );
    check(
        doc.boundary.ambient_pressure_Pa > 0.0,
        "boundary.ambient_pressure_Pa must be > 0",
        &mut problems,
    );
    check(
        doc.boundary.oven_vapor_density_kg_per_m3 >= 0.0,
        "boundary.oven_vapor_density_kg_per_m3 must be >= 0",
        &mut problems,
    );
    check(doc.simulation.t_end_s > 0.0, "simulation.t_end_s must be > 0", &mut problems);
    if !problems.is_empty() {
        return Err(ConfigError::new(path.display().to_string(), problems).into());
    }

    let material = load_material(&resolve(path, &doc.material))?;
    let grid = Grid1D::graded(doc.grid.length_m, doc.grid.n_cells, doc.grid.growth)?;

    let oven_temperature = match &doc.boundary.oven_temperature {
        ForcingDoc::Constant { value_K } => Forcing::Constant(*value_K),
        ForcingDoc::Csv { path: rel } => {
            Forcing::Sampled(crate::io::read_signal_csv(&resolve(path, rel))?)
        }
    };
    let bc = BoundarySpec {
        heat_transfer_coeff: doc.boundary.heat_transfer_coeff_W_per_m2K,
        mass_transfer_coeff: doc.boundary.mass_transfer_coeff_m_per_s,
        ambient_pressure: doc.boundary.ambient_pressure_Pa,
        oven_temperature,
        oven_vapor_density: Forcing::Constant(doc.boundary.oven_vapor_density_kg_per_m3),
    };

    let init_local = crate::material::LocalState {
        temperature: doc.initial.temperature_K,
        pressure: doc.initial.pressure_Pa,
        vapor_conc: doc.initial.vapor_concentration_mol_per_m3 * material.vapor.molar_mass(),
        water_conc: doc.initial.water_saturation * material.water_capacity(),
    };
    let init = FieldState::uniform(grid.n_cells(), init_local);

    let solver = SolveConfig {
        dt_init: doc.solver.dt_init_s,
        dt_min: doc.solver.dt_min_s,
        dt_max: doc.solver.dt_max_s,
        newton_tol: doc.solver.newton_tol,
        newton_max_iter: doc.solver.newton_max_iter,
        step_rtol: doc.solver.step_rtol,
        output_interval: doc.solver.output_interval_s,
    };
    solver
        .validate()
        .map_err(|e| ConfigError::single(path.display().to_string(), e.to_string()))?;

    Ok(CaseSetup { material, grid, init, bc, solver, t_end: doc.simulation.t_end_s })
}

// ---------------------------------------------------------------------------
// Pipeline file

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineDoc {
    schema: String,
    case: String,
    seed: u64,
    output_dir: String,
    excitation: ExcitationDoc,
    identification: IdentificationDoc,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExcitationDoc {
    level_low_K: f64,
    level_high_K: f64,
    min_hold_s: f64,
    freq_low_Hz: f64,
    freq_high_Hz: f64,
    duration_s: f64,
    sampling_dt_s: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentificationDoc {
    dt_s: f64,
    output_lags: usize,
    input_lags: usize,
    max_degree: usize,
    ridge: f64,
    selection_budget: usize,
    min_improvement_rel: f64,
    #[serde(default = "default_sim_refine")]
    sim_refine_iterations: usize,
    /// Auxiliary input-derived regressor channels.
    #[serde(default)]
    input_channels: Vec<crate::sysid::InputChannel>,
}

fn default_sim_refine() -> usize {
    crate::sysid::FitConfig::default().sim_refine_iterations
}

/// Excitation design without the per-case seed.
#[derive(Debug, Clone, Copy)]
pub struct ExcitationConfig {
    pub level_low: f64,
    pub level_high: f64,
    pub min_hold: f64,
    pub freq_low: f64,
    pub freq_high: f64,
    pub duration: f64,
    pub sampling_dt: f64,
}

impl ExcitationConfig {
    pub fn to_spec(&self, seed: u64) -> AprbsSpec {
        AprbsSpec {
            level_low: self.level_low,
            level_high: self.level_high,
            min_hold: self.min_hold,
            freq_low: self.freq_low,
            freq_high: self.freq_high,
            duration: self.duration,
            seed,
        }
    }
}

/// Fully resolved pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub case: CaseSetup,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub excitation: ExcitationConfig,
    pub identification: FitConfig,
}

/// Loads the pipeline document and everything it references.
pub fn load_pipeline(path: &Path) -> Result<PipelineConfig, Error> {
    let doc: PipelineDoc = read_toml(path)?;
    check_schema(path, &doc.schema, PIPELINE_SCHEMA)?;

    let mut problems = Vec::new();
    let e = &doc.excitation;
    if !(e.level_low_K < e.level_high_K) {
        problems.push("excitation.level_low_K must be below level_high_K".into());
    }
    if !(e.min_hold_s >= 0.0) {
        problems.push("excitation.min_hold_s must be >= 0".into());
    }
    if !(e.freq_low_Hz > 0.0 && e.freq_low_Hz <= e.freq_high_Hz) {
        problems.push("excitation frequency range must satisfy 0 < low <= high".into());
    }
    if !(e.duration_s > 0.0) {
        problems.push("excitation.duration_s must be > 0".into());
    }
    if !(e.sampling_dt_s > 0.0) {
        problems.push("excitation.sampling_dt_s must be > 0".into());
    }
    let i = &doc.identification;
    if i.output_lags == 0 || i.input_lags == 0 {
        problems.push("identification lag counts must be >= 1".into());
    }
    if !(i.dt_s > 0.0) {
        problems.push("identification.dt_s must be > 0".into());
    }
    if i.max_degree == 0 {
        problems.push("identification.max_degree must be >= 1".into());
    }
    if !(i.ridge >= 0.0) {
        problems.push("identification.ridge must be >= 0".into());
    }
    if !problems.is_empty() {
        return Err(ConfigError::new(path.display().to_string(), problems).into());
    }

    let case = load_case(&resolve(path, &doc.case))?;
    Ok(PipelineConfig {
        case,
        seed: doc.seed,
        output_dir: resolve(path, &doc.output_dir),
        excitation: ExcitationConfig {
            level_low: e.level_low_K,
            level_high: e.level_high_K,
            min_hold: e.min_hold_s,
            freq_low: e.freq_low_Hz,
            freq_high: e.freq_high_Hz,
            duration: e.duration_s,
            sampling_dt: e.sampling_dt_s,
        },
        identification: FitConfig {
            output_lags: i.output_lags,
            input_lags: i.input_lags,
            dt: i.dt_s,
            max_degree: i.max_degree,
            ridge: i.ridge,
            selection_budget: i.selection_budget,
            min_improvement_rel: i.min_improvement_rel,
            sim_refine_iterations: i.sim_refine_iterations,
            input_channels: i.input_channels.clone(),
        },
    })
}

// ---------------------------------------------------------------------------
// Training-set manifest

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainsetDoc {
    schema: String,
    dt_s: f64,
    #[serde(rename = "case")]
    cases: Vec<TrainsetCaseDoc>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainsetCaseDoc {
    id: String,
    /// Oven-temperature channel: a `t_s, value` CSV.
    input: String,
    /// Core-temperature channel: a probes CSV (`T_core_K` column).
    output: String,
}

/// Loads a training-set manifest, resampling each case's input and output
/// channels onto the manifest's sampling grid.
pub fn load_training_manifest(path: &Path) -> Result<crate::sysid::TrainingSet, Error> {
    let doc: TrainsetDoc = read_toml(path)?;
    check_schema(path, &doc.schema, TRAINSET_SCHEMA)?;
    if !(doc.dt_s > 0.0) {
        return Err(ConfigError::single(path.display().to_string(), "dt_s must be > 0").into());
    }
    if doc.cases.is_empty() {
        return Err(ConfigError::single(path.display().to_string(), "no cases listed").into());
    }
    let mut cases = Vec::with_capacity(doc.cases.len());
    for c in &doc.cases {
        let input = crate::io::read_signal_csv(&resolve(path, &c.input))?;
        let output = crate::io::read_signal_column(&resolve(path, &c.output), "T_core_K")?;
        let duration = input.duration().min(output.duration());
        let n = (duration / doc.dt_s).floor() as usize + 1;
        let to_cfg = |e: crate::error::SignalError| -> Error {
            ConfigError::single(path.display().to_string(), e.to_string()).into()
        };
        cases.push(crate::sysid::TrainingCase {
            id: c.id.clone(),
            input: input.resample(doc.dt_s, n).map_err(to_cfg)?.values().to_vec(),
            output: output.resample(doc.dt_s, n).map_err(to_cfg)?.values().to_vec(),
        });
    }
    Ok(crate::sysid::TrainingSet { dt: doc.dt_s, cases })
}

/// Renders a training-set manifest document.
pub fn trainset_manifest_toml(dt_s: f64, entries: &[(String, String, String)]) -> String {
    let mut out = format!("schema = \"{TRAINSET_SCHEMA}\"\ndt_s = {dt_s}\n");
    for (id, input, output) in entries {
        out.push_str(&format!(
            "\n[[case]]\nid = \"{id}\"\ninput = \"{input}\"\noutput = \"{output}\"\n"
        ));
    }
    out
}
