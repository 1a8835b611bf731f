//! Implicit time integration of the coupled transport system.
//!
//! Backward Euler in time; each step solves the nonlinear residual with a
//! damped Newton iteration on a colored finite-difference Jacobian and a
//! banded LU. Adaptive runs control the local error by step doubling.

use crate::error::SolverError;
use crate::fom::flux::{face_flux, CellProps};
use crate::fom::grid::Grid1D;
use crate::fom::linalg::BandedMatrix;
use crate::fom::state::{BoundarySpec, FieldState, SolveConfig};
use crate::material::{FoodMaterial, LocalState};

/// Typical magnitudes of the four unknowns (T, p, c_v, c_w); used for
/// finite-difference increments and error-control scaling.
const TYP_UNKNOWN: [f64; 4] = [300.0, 1.0e5, 0.01, 375.0];
/// Row scales turning raw residuals into relative per-step changes:
/// energy rows are divided by `rho_cp_typ * T_typ`, mass rows by a typical
/// concentration.
const EQ_SCALE: [f64; 4] = [6.0e8, 0.5, 0.01, 375.0];
const NEWTON_ABS_FLOOR: f64 = 1e-13;
/// Scaled residuals below this are assembly roundoff (the stiff
/// evaporation term cancels catastrophically); an iterate stalled here is
/// converged for every practical purpose.
const NEWTON_ROUNDOFF_STALL: f64 = 1e-9;

/// Surface exchange rates of an accepted state, kg/(m^2 s).
#[derive(Debug, Clone, Copy, Default)]
struct SurfaceRates {
    vapor_out: f64,
    water_out: f64,
}

struct Workspace {
    u: Vec<f64>,
    u_old: Vec<f64>,
    f0: Vec<f64>,
    f_try: Vec<f64>,
    f_pert: Vec<f64>,
    delta: Vec<f64>,
    old_c_g: Vec<f64>,
    props: Vec<CellProps>,
    flux_gas: Vec<f64>,
    flux_vapor: Vec<f64>,
    flux_water: Vec<f64>,
    flux_heat: Vec<f64>,
    jacobian: BandedMatrix,
    scratch_state: FieldState,
}

impl Workspace {
    fn new(n: usize, template: &FieldState) -> Self {
        let m = 4 * n;
        Workspace {
            u: vec![0.0; m],
            u_old: vec![0.0; m],
            f0: vec![0.0; m],
            f_try: vec![0.0; m],
            f_pert: vec![0.0; m],
            delta: vec![0.0; m],
            old_c_g: vec![0.0; n],
            props: vec![CellProps::default(); n],
            flux_gas: vec![0.0; n + 1],
            flux_vapor: vec![0.0; n + 1],
            flux_water: vec![0.0; n + 1],
            flux_heat: vec![0.0; n + 1],
            jacobian: BandedMatrix::zeros(m, 7, 7),
            scratch_state: template.clone(),
        }
    }
}

pub(crate) struct System<'a> {
    pub grid: &'a Grid1D,
    pub material: &'a FoodMaterial,
    pub bc: &'a BoundarySpec,
}

impl<'a> System<'a> {
    #[inline]
    fn local_from(u: &[f64], i: usize) -> LocalState {
        LocalState {
            temperature: u[4 * i],
            pressure: u[4 * i + 1],
            vapor_conc: u[4 * i + 2],
            water_conc: u[4 * i + 3],
        }
    }

    /// Assembles the scaled backward-Euler residual at iterate `u`.
    ///
    /// `old_c_g` and `u_old` carry the previous time level; `t_oven` and
    /// `rho_v_oven` are the boundary forcings at the new time level.
    fn assemble(
        &self,
        u: &[f64],
        u_old: &[f64],
        old_c_g: &[f64],
        dt: f64,
        t_oven: f64,
        rho_v_oven: f64,
        ws_props: &mut [CellProps],
        jg: &mut [f64],
        jv: &mut [f64],
        jw: &mut [f64],
        q: &mut [f64],
        out: &mut [f64],
    ) -> SurfaceRates {
        let n = self.grid.n_cells();
        let m = self.material;
        let phi = m.porosity;
        let widths = self.grid.widths();
        let centers = self.grid.centers();

        for i in 0..n {
            ws_props[i] = CellProps::evaluate(m, &Self::local_from(u, i));
        }

        // Interior faces 1..n-1.
        for f in 1..n {
            let l = f - 1;
            let ll = Self::local_from(u, l);
            let lr = Self::local_from(u, f);
            let flux = face_flux(
                (&ll, &ws_props[l]),
                (&lr, &ws_props[f]),
                centers[f] - centers[l],
                m,
            );
            jg[f] = flux.gas;
            jv[f] = flux.vapor;
            jw[f] = flux.water;
            q[f] = flux.heat;
        }

        // Surface face 0: Dirichlet pressure drives a half-cell Darcy gas
        // flux; vapor and water cross via the convective exchange; the
        // conductive flux eliminates the face temperature against the
        // Robin condition including the latent sink.
        let p0 = &ws_props[0];
        let s0 = Self::local_from(u, 0);
        let grad_p0 = (s0.pressure - self.bc.ambient_pressure) / (0.5 * widths[0]);
        jg[0] = -p0.rho_g.max(0.0) * p0.mob_g * grad_p0;
        let deficit = p0.rho_v - rho_v_oven;
        let h_m = self.bc.mass_transfer_coeff;
        let vapor_out = h_m * phi * p0.s_g * deficit;
        let water_out = h_m * phi * p0.s_w * deficit;
        jv[0] = -vapor_out;
        jw[0] = -water_out;
        let h_t = self.bc.heat_transfer_coeff;
        let resist = 0.5 * widths[0] / p0.k_eff;
        q[0] = (h_t * (t_oven - s0.temperature) - m.latent_heat * water_out)
            / (1.0 + resist * h_t);

        // Bottom face n: insulated, impermeable.
        jg[n] = 0.0;
        jv[n] = 0.0;
        jw[n] = 0.0;
        q[n] = 0.0;

        let cp_g = m.gas.specific_heat;
        let cp_w = m.water.specific_heat;
        for i in 0..n {
            let w = widths[i];
            let p = &ws_props[i];
            let t_i = u[4 * i];
            let c_v_i = u[4 * i + 2];
            let c_w_i = u[4 * i + 3];

            // Upwinded convective enthalpy per phase.
            let mut conv = 0.0;
            for (flux, cp) in [(&*jg, cp_g), (&*jw, cp_w)] {
                let jbar = 0.5 * (flux[i] + flux[i + 1]);
                if jbar != 0.0 {
                    let grad_t = if jbar > 0.0 {
                        if i > 0 {
                            (u[4 * i] - u[4 * (i - 1)]) / (centers[i] - centers[i - 1])
                        } else {
                            (u[4] - u[0]) / (centers[1] - centers[0])
                        }
                    } else if i < n - 1 {
                        (u[4 * (i + 1)] - u[4 * i]) / (centers[i + 1] - centers[i])
                    } else {
                        (u[4 * (n - 1)] - u[4 * (n - 2)]) / (centers[n - 1] - centers[n - 2])
                    };
                    conv += jbar * cp * grad_t;
                }
            }

            let r_t = p.rho_cp * (t_i - u_old[4 * i]) / dt
                + conv
                + (q[i + 1] - q[i]) / w
                + m.latent_heat * p.evap;
            let r_g = (p.c_g - old_c_g[i]) / dt + (jg[i + 1] - jg[i]) / w - p.evap;
            let r_v = (c_v_i - u_old[4 * i + 2]) / dt + (jv[i + 1] - jv[i]) / w - p.evap;
            let r_w = (c_w_i - u_old[4 * i + 3]) / dt + (jw[i + 1] - jw[i]) / w + p.evap;

            out[4 * i] = r_t * dt / EQ_SCALE[0];
            out[4 * i + 1] = r_g * dt / EQ_SCALE[1];
            out[4 * i + 2] = r_v * dt / EQ_SCALE[2];
            out[4 * i + 3] = r_w * dt / EQ_SCALE[3];
        }

        SurfaceRates { vapor_out, water_out }
    }

    /// One backward-Euler solve from `state` over `dt`. Returns the new
    /// state and the surface mass-loss increment `dt * (j_v + j_w)`.
    fn newton_substep(
        &self,
        ws: &mut Workspace,
        state: &FieldState,
        dt: f64,
        cfg: &SolveConfig,
    ) -> Result<(FieldState, f64), SubstepFailure> {
        let n = self.grid.n_cells();
        let t_new = state.time + dt;
        let t_oven = self
            .bc
            .oven_temperature
            .value_at(t_new)
            .map_err(|e| SubstepFailure::Fatal(SolverError::Setup(e.to_string())))?;
        let rho_v_oven = self
            .bc
            .oven_vapor_density
            .value_at(t_new)
            .map_err(|e| SubstepFailure::Fatal(SolverError::Setup(e.to_string())))?;

        state.pack(&mut ws.u_old);
        for i in 0..n {
            ws.old_c_g[i] = CellProps::evaluate(self.material, &state.local(i)).c_g;
        }
        ws.u.copy_from_slice(&ws.u_old);

        let mut rates = self.assemble_into_f0(ws, dt, t_oven, rho_v_oven);
        let mut norm = max_abs(&ws.f0);
        let norm0 = norm.max(NEWTON_ABS_FLOOR);
        let target = cfg.newton_tol * norm0 + NEWTON_ABS_FLOOR;

        let mut iter = 0;
        while norm > target {
            if norm <= NEWTON_ROUNDOFF_STALL {
                break;
            }
            if iter >= cfg.newton_max_iter {
                return Err(SubstepFailure::NoConvergence { residual: norm });
            }
            iter += 1;

            self.fd_jacobian(ws, dt, t_oven, rho_v_oven);
            ws.delta.copy_from_slice(&ws.f0);
            for v in ws.delta.iter_mut() {
                *v = -*v;
            }
            let pivots = match ws.jacobian.factorize() {
                Some(p) => p,
                None => return Err(SubstepFailure::NoConvergence { residual: norm }),
            };
            ws.jacobian.solve(&pivots, &mut ws.delta);
            if ws.delta.iter().any(|v| !v.is_finite()) {
                return Err(SubstepFailure::NoConvergence { residual: norm });
            }

            // Damped update: halve until the residual drops.
            let mut damping = 1.0;
            let mut accepted = false;
            let u_base = ws.u.clone();
            for _ in 0..12 {
                for j in 0..ws.u.len() {
                    ws.u[j] = u_base[j] + damping * ws.delta[j];
                }
                let try_rates = self.assemble(
                    &ws.u,
                    &ws.u_old,
                    &ws.old_c_g,
                    dt,
                    t_oven,
                    rho_v_oven,
                    &mut ws.props,
                    &mut ws.flux_gas,
                    &mut ws.flux_vapor,
                    &mut ws.flux_water,
                    &mut ws.flux_heat,
                    &mut ws.f_try,
                );
                let try_norm = max_abs(&ws.f_try);
                if try_norm.is_finite() && (try_norm < norm * (1.0 - 1e-4 * damping) || try_norm <= target)
                {
                    ws.f0.copy_from_slice(&ws.f_try);
                    norm = try_norm;
                    rates = try_rates;
                    accepted = true;
                    break;
                }
                damping *= 0.5;
            }
            if !accepted {
                return Err(SubstepFailure::NoConvergence { residual: norm });
            }
        }

        // Physical admissibility of the accepted state; tiny negative
        // concentrations from roundoff are snapped to zero.
        for i in 0..n {
            let t_i = ws.u[4 * i];
            let p_i = ws.u[4 * i + 1];
            if !(t_i > 0.0) || !(p_i > 0.0) || !t_i.is_finite() || !p_i.is_finite() {
                return Err(SubstepFailure::NoConvergence { residual: norm });
            }
            for k in [4 * i + 2, 4 * i + 3] {
                if ws.u[k] < 0.0 {
                    if ws.u[k] > -1e-9 * TYP_UNKNOWN[k % 4] {
                        ws.u[k] = 0.0;
                    } else {
                        return Err(SubstepFailure::NoConvergence { residual: norm });
                    }
                }
            }
            let cap = self.material.water_capacity();
            if ws.u[4 * i + 3] > cap {
                if ws.u[4 * i + 3] < cap * (1.0 + 1e-9) {
                    ws.u[4 * i + 3] = cap;
                } else {
                    return Err(SubstepFailure::NoConvergence { residual: norm });
                }
            }
        }

        let mut new_state = ws.scratch_state.clone();
        new_state.unpack(&ws.u);
        new_state.time = t_new;
        Ok((new_state, dt * (rates.vapor_out + rates.water_out)))
    }

    fn assemble_into_f0(
        &self,
        ws: &mut Workspace,
        dt: f64,
        t_oven: f64,
        rho_v_oven: f64,
    ) -> SurfaceRates {
        self.assemble(
            &ws.u,
            &ws.u_old,
            &ws.old_c_g,
            dt,
            t_oven,
            rho_v_oven,
            &mut ws.props,
            &mut ws.flux_gas,
            &mut ws.flux_vapor,
            &mut ws.flux_water,
            &mut ws.flux_heat,
            &mut ws.f0,
        )
    }

    /// Finite-difference Jacobian by stride-3 cell coloring: cells three
    /// apart have disjoint residual stencils, so twelve perturbed residual
    /// evaluations cover all columns regardless of grid size.
    fn fd_jacobian(&self, ws: &mut Workspace, dt: f64, t_oven: f64, rho_v_oven: f64) {
        let n = self.grid.n_cells();
        ws.jacobian.reset();
        let sqrt_eps = f64::EPSILON.sqrt();
        let mut deltas = vec![0.0; n];

        for color in 0..3usize {
            for var in 0..4usize {
                let mut cell = color;
                while cell < n {
                    let j = 4 * cell + var;
                    let d = sqrt_eps * (TYP_UNKNOWN[var] + ws.u[j].abs());
                    deltas[cell] = d;
                    ws.u[j] += d;
                    cell += 3;
                }
                self.assemble(
                    &ws.u,
                    &ws.u_old,
                    &ws.old_c_g,
                    dt,
                    t_oven,
                    rho_v_oven,
                    &mut ws.props,
                    &mut ws.flux_gas,
                    &mut ws.flux_vapor,
                    &mut ws.flux_water,
                    &mut ws.flux_heat,
                    &mut ws.f_pert,
                );
                let mut cell = color;
                while cell < n {
                    let j = 4 * cell + var;
                    ws.u[j] -= deltas[cell];
                    let inv_d = 1.0 / deltas[cell];
                    let lo = cell.saturating_sub(1);
                    let hi = (cell + 1).min(n - 1);
                    for r_cell in lo..=hi {
                        for eq in 0..4 {
                            let row = 4 * r_cell + eq;
                            let dfdu = (ws.f_pert[row] - ws.f0[row]) * inv_d;
                            if dfdu != 0.0 {
                                ws.jacobian.set(row, j, dfdu);
                            }
                        }
                    }
                    cell += 3;
                }
            }
        }
    }
}

enum SubstepFailure {
    NoConvergence { residual: f64 },
    Fatal(SolverError),
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Advances `state` by exactly `dt` with backward Euler; on Newton failure
/// the step is split in half and retried, down to `cfg.dt_min`.
pub fn step(
    state: &FieldState,
    dt: f64,
    grid: &Grid1D,
    bc: &BoundarySpec,
    material: &FoodMaterial,
    cfg: &SolveConfig,
) -> Result<FieldState, SolverError> {
    cfg.validate()?;
    bc.validate()?;
    material.validate()?;
    let system = System { grid, material, bc };
    let mut ws = Workspace::new(grid.n_cells(), state);
    let (new_state, _) = advance_exactly(&system, &mut ws, state, dt, cfg)?;
    Ok(new_state)
}

/// Advances by exactly `dt`, splitting on Newton failure. Returns the new
/// state and the accumulated surface mass-loss increment.
fn advance_exactly(
    system: &System,
    ws: &mut Workspace,
    state: &FieldState,
    dt: f64,
    cfg: &SolveConfig,
) -> Result<(FieldState, f64), SolverError> {
    match system.newton_substep(ws, state, dt, cfg) {
        Ok(result) => Ok(result),
        Err(SubstepFailure::Fatal(e)) => Err(e),
        Err(SubstepFailure::NoConvergence { residual }) => {
            let half = 0.5 * dt;
            if half < cfg.dt_min {
                return Err(SolverError::AtTime {
                    t: state.time,
                    source: Box::new(SolverError::TimeStepUnderflow {
                        t: state.time,
                        dt_min: cfg.dt_min,
                        residual,
                    }),
                });
            }
            let (mid, loss_a) = advance_exactly(system, ws, state, half, cfg)?;
            let (end, loss_b) = advance_exactly(system, ws, &mid, half, cfg)?;
            Ok((end, loss_a + loss_b))
        }
    }
}

/// Scalar probes recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub time: f64,
    /// Reconstructed surface (face) temperature, K.
    pub surface_temperature: f64,
    /// Temperature at the insulated bottom (y = L), K.
    pub core_temperature: f64,
    /// Total moisture `integral (c_w + c_v) dy`, kg/m^2.
    pub moisture: f64,
    /// Cumulative surface mass loss, kg/m^2.
    pub mass_loss: f64,
    /// Surface pressure: Dirichlet, equals the ambient pressure exactly.
    pub surface_pressure: f64,
}

/// Time-sampled simulation output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid1D,
    /// Field states at the output sampling interval. Empty when states
    /// were not kept.
    pub states: Vec<FieldState>,
    pub probes: Vec<ProbeSample>,
}

impl Trajectory {
    pub fn core_temperature_series(&self) -> Vec<f64> {
        self.probes.iter().map(|p| p.core_temperature).collect()
    }

    pub fn probe_times(&self) -> Vec<f64> {
        self.probes.iter().map(|p| p.time).collect()
    }

    /// Moisture-budget audit: relative mismatch between the change of
    /// total moisture and the cumulative boundary outflow, normalized by
    /// the initial moisture.
    pub fn moisture_balance_defect(&self) -> f64 {
        let first = self.probes.first().expect("trajectory has samples");
        let last = self.probes.last().expect("trajectory has samples");
        let delta = last.moisture - first.moisture;
        let outflow = last.mass_loss - first.mass_loss;
        (delta + outflow).abs() / first.moisture
    }
}

/// Mass of water plus vapor per unit area, midpoint quadrature.
pub fn total_moisture(state: &FieldState, grid: &Grid1D) -> f64 {
    state
        .water_conc
        .iter()
        .zip(&state.vapor_conc)
        .zip(grid.widths())
        .map(|((c_w, c_v), w)| (c_w + c_v) * w)
        .sum()
}

/// Surface (face) temperature from the Robin elimination at the exchange
/// boundary, consistent with the solver's discrete heat flux.
pub fn surface_temperature(
    state: &FieldState,
    grid: &Grid1D,
    bc: &BoundarySpec,
    material: &FoodMaterial,
) -> Result<f64, SolverError> {
    let t = state.time;
    let t_oven = bc
        .oven_temperature
        .value_at(t)
        .map_err(|e| SolverError::Setup(e.to_string()))?;
    let rho_v_oven = bc
        .oven_vapor_density
        .value_at(t)
        .map_err(|e| SolverError::Setup(e.to_string()))?;
    let props = CellProps::evaluate(material, &state.local(0));
    let water_out = bc.mass_transfer_coeff * material.porosity * props.s_w * (props.rho_v - rho_v_oven);
    let a = 0.5 * grid.widths()[0] / props.k_eff;
    let t0 = state.temperature[0];
    let h = bc.heat_transfer_coeff;
    Ok((t0 / a + h * t_oven - material.latent_heat * water_out) / (1.0 / a + h))
}

fn probe(
    state: &FieldState,
    grid: &Grid1D,
    bc: &BoundarySpec,
    material: &FoodMaterial,
    mass_loss: f64,
) -> Result<ProbeSample, SolverError> {
    Ok(ProbeSample {
        time: state.time,
        surface_temperature: surface_temperature(state, grid, bc, material)?,
        core_temperature: *state.temperature.last().expect("cells"),
        moisture: total_moisture(state, grid),
        mass_loss,
        surface_pressure: bc.ambient_pressure,
    })
}

/// Runs the full-order model to `t_end` with adaptive backward-Euler
/// stepping, sampling states and probes at the configured output interval.
///
/// `keep_states` controls whether full field states are stored alongside
/// the scalar probes.
pub fn simulate(
    init: &FieldState,
    grid: &Grid1D,
    bc: &BoundarySpec,
    material: &FoodMaterial,
    cfg: &SolveConfig,
    t_end: f64,
    keep_states: bool,
) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    bc.validate()?;
    material.validate()?;
    init.validate(material, grid)?;
    if !(t_end > 0.0) {
        return Err(SolverError::Setup(format!("end time {t_end} must be > 0")));
    }
    for (name, forcing) in [
        ("oven temperature", &bc.oven_temperature),
        ("oven vapor density", &bc.oven_vapor_density),
    ] {
        if forcing.valid_until() < t_end {
            return Err(SolverError::Setup(format!(
                "{name} signal covers {} s but the run lasts {t_end} s",
                forcing.valid_until()
            )));
        }
    }

    let system = System { grid, material, bc };
    let mut ws = Workspace::new(grid.n_cells(), init);

    let mut current = init.clone();
    current.time = 0.0;
    let mut mass_loss = 0.0;

    let mut states = Vec::new();
    let mut probes = Vec::new();
    probes.push(probe(&current, grid, bc, material, mass_loss)?);
    if keep_states {
        states.push(current.clone());
    }
    let mut next_output = cfg.output_interval;

    let mut dt = cfg.dt_init.clamp(cfg.dt_min, cfg.dt_max);
    let fixed = cfg.is_fixed_step();

    while current.time < t_end - 1e-12 {
        let dt_attempt = dt.min(t_end - current.time);
        let result = if fixed {
            match system.newton_substep(&mut ws, &current, dt_attempt, cfg) {
                Ok((s, dm)) => Ok((s, dm, dt_attempt)),
                Err(SubstepFailure::Fatal(e)) => Err(e),
                Err(SubstepFailure::NoConvergence { residual }) => Err(SolverError::AtTime {
                    t: current.time,
                    source: Box::new(SolverError::TimeStepUnderflow {
                        t: current.time,
                        dt_min: cfg.dt_min,
                        residual,
                    }),
                }),
            }
        } else {
            attempt_controlled_step(&system, &mut ws, &current, dt_attempt, cfg)
        };

        let (new_state, dm, dt_taken) = result?;
        mass_loss += dm;

        // Emit output samples crossed by this step via linear interpolation.
        while next_output <= new_state.time + 1e-9 && next_output <= t_end + 1e-9 {
            let w = (next_output - current.time) / (new_state.time - current.time);
            let mut interp = FieldState::lerp(&current, &new_state, w.clamp(0.0, 1.0));
            interp.time = next_output;
            let lerp_loss = mass_loss - dm * (1.0 - w.clamp(0.0, 1.0));
            probes.push(probe(&interp, grid, bc, material, lerp_loss)?);
            if keep_states {
                states.push(interp);
            }
            next_output += cfg.output_interval;
        }

        current = new_state;
        if !fixed {
            dt = propose_next_dt(dt, dt_taken, cfg);
        }
    }

    Ok(Trajectory { grid: grid.clone(), states, probes })
}

/// One error-controlled step: compares a full step against two half steps
/// and accepts the half-step solution when the difference passes the
/// tolerance. Returns `(state, mass_loss_increment, dt_actually_taken)`.
fn attempt_controlled_step(
    system: &System,
    ws: &mut Workspace,
    current: &FieldState,
    dt_first: f64,
    cfg: &SolveConfig,
) -> Result<(FieldState, f64, f64), SolverError> {
    let mut dt = dt_first;
    loop {
        let full = match system.newton_substep(ws, current, dt, cfg) {
            Ok(r) => Some(r),
            Err(SubstepFailure::Fatal(e)) => return Err(e),
            Err(SubstepFailure::NoConvergence { residual }) => {
                if 0.5 * dt < cfg.dt_min {
                    return Err(SolverError::AtTime {
                        t: current.time,
                        source: Box::new(SolverError::TimeStepUnderflow {
                            t: current.time,
                            dt_min: cfg.dt_min,
                            residual,
                        }),
                    });
                }
                None
            }
        };
        let Some((state_full, _)) = full else {
            dt *= 0.5;
            continue;
        };

        let halves = (|| -> Result<(FieldState, f64), SubstepFailure> {
            let (mid, dm_a) = system.newton_substep(ws, current, 0.5 * dt, cfg)?;
            let (end, dm_b) = system.newton_substep(ws, &mid, 0.5 * dt, cfg)?;
            Ok((end, dm_a + dm_b))
        })();
        let (state_half, dm) = match halves {
            Ok(r) => r,
            Err(SubstepFailure::Fatal(e)) => return Err(e),
            Err(SubstepFailure::NoConvergence { residual }) => {
                if 0.5 * dt < cfg.dt_min {
                    return Err(SolverError::AtTime {
                        t: current.time,
                        source: Box::new(SolverError::TimeStepUnderflow {
                            t: current.time,
                            dt_min: cfg.dt_min,
                            residual,
                        }),
                    });
                }
                dt *= 0.5;
                continue;
            }
        };

        let err = step_doubling_error(&state_full, &state_half, cfg.step_rtol);
        if err <= 1.0 || dt <= cfg.dt_min * (1.0 + 1e-12) {
            return Ok((state_half, dm, dt));
        }
        dt = (dt * (0.9 / err.sqrt()).clamp(0.25, 0.9)).max(cfg.dt_min);
    }
}

/// Max-norm of the full-vs-half-step difference relative to
/// `rtol * (typical + |value|)`.
fn step_doubling_error(full: &FieldState, half: &FieldState, rtol: f64) -> f64 {
    let mut err = 0.0f64;
    let fields = [
        (&full.temperature, &half.temperature, TYP_UNKNOWN[0]),
        (&full.pressure, &half.pressure, TYP_UNKNOWN[1]),
        (&full.vapor_conc, &half.vapor_conc, TYP_UNKNOWN[2]),
        (&full.water_conc, &half.water_conc, TYP_UNKNOWN[3]),
    ];
    for (a, b, typ) in fields {
        for (x, y) in a.iter().zip(b.iter()) {
            err = err.max((x - y).abs() / (rtol * (typ + y.abs())));
        }
    }
    err
}

fn propose_next_dt(dt_proposed: f64, dt_taken: f64, cfg: &SolveConfig) -> f64 {
    // Grow cautiously after a clean step, keep the reduced size otherwise.
    let next = if dt_taken >= dt_proposed * (1.0 - 1e-12) { dt_taken * 1.5 } else { dt_taken };
    next.clamp(cfg.dt_min, cfg.dt_max)
}
