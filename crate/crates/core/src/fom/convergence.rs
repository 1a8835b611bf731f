//! Grid-convergence study on the core-temperature probe.

use crate::error::SolverError;
use crate::fom::grid::Grid1D;
use crate::fom::solver::{simulate, Trajectory};
use crate::fom::state::{BoundarySpec, FieldState, SolveConfig};
use crate::material::{FoodMaterial, LocalState};
use crate::metrics;

/// Result of a grid-refinement study.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub resolutions: Vec<usize>,
    /// Core-temperature MAPE of each resolution against the finest grid,
    /// percent. The finest entry is zero by construction.
    pub mape_vs_finest: Vec<f64>,
    /// Orders from consecutive solution differences,
    /// `log(d_i / d_{i+1}) / log(ratio)`; one fewer than the number of
    /// difference pairs.
    pub pairwise_orders: Vec<f64>,
    /// Order observed on the finest pair, or `None` when the differences
    /// do not shrink monotonically (inconclusive refinement).
    pub observed_order: Option<f64>,
}

/// Runs the same case on a geometric ladder of resolutions and reports
/// Richardson-style observed order plus per-resolution deviation from the
/// finest grid.
#[allow(clippy::too_many_arguments)]
pub fn grid_convergence(
    length: f64,
    init: LocalState,
    bc: &BoundarySpec,
    material: &FoodMaterial,
    cfg: &SolveConfig,
    t_end: f64,
    resolutions: &[usize],
) -> Result<ConvergenceStudy, SolverError> {
    if resolutions.len() < 3 {
        return Err(SolverError::Setup(format!(
            "need at least 3 resolutions, got {}",
            resolutions.len()
        )));
    }
    let ratio = resolutions[1] as f64 / resolutions[0] as f64;
    if ratio < 1.5 {
        return Err(SolverError::Setup("refinement ratio must be at least 1.5".into()));
    }
    for w in resolutions.windows(2) {
        let r = w[1] as f64 / w[0] as f64;
        if (r / ratio - 1.0).abs() > 0.02 {
            return Err(SolverError::Setup(format!(
                "resolutions must form a geometric progression; got ratios {ratio} and {r}"
            )));
        }
    }

    let mut series: Vec<Vec<f64>> = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let run = run_case(length, n, init, bc, material, cfg, t_end)?;
        series.push(run.core_temperature_series());
    }
    let len = series.iter().map(Vec::len).min().expect("nonempty");
    for s in series.iter_mut() {
        s.truncate(len);
    }

    let finest = series.last().expect("nonempty");
    let mape_vs_finest: Vec<f64> = series
        .iter()
        .map(|s| metrics::mape(finest, s).expect("co-sampled positive series"))
        .collect();

    let diffs: Vec<f64> = series
        .windows(2)
        .map(|pair| metrics::rmse(&pair[0], &pair[1]).expect("co-sampled series"))
        .collect();
    let mut pairwise_orders = Vec::new();
    for pair in diffs.windows(2) {
        if pair[0] > 0.0 && pair[1] > 0.0 {
            pairwise_orders.push((pair[0] / pair[1]).ln() / ratio.ln());
        }
    }
    let monotone =
        diffs.windows(2).all(|p| p[1] < p[0]) && diffs.len() + 1 == resolutions.len();
    let observed_order =
        if monotone { pairwise_orders.last().copied() } else { None };

    Ok(ConvergenceStudy { resolutions: resolutions.to_vec(), mape_vs_finest, pairwise_orders, observed_order })
}

fn run_case(
    length: f64,
    n_cells: usize,
    init: LocalState,
    bc: &BoundarySpec,
    material: &FoodMaterial,
    cfg: &SolveConfig,
    t_end: f64,
) -> Result<Trajectory, SolverError> {
    let grid = Grid1D::uniform(length, n_cells)?;
    let state = FieldState::uniform(n_cells, init);
    simulate(&state, &grid, bc, material, cfg, t_end, false)
}
