//! CSV input/output and atomic file writes.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! runs produce byte-identical files.

use crate::error::{ConfigError, SignalError};
use crate::fom::Trajectory;
use crate::material::FoodMaterial;
use crate::signal::Signal;
use crate::Error;
use std::fmt::Write as _;
use std::path::Path;

pub const TRAJECTORY_HEADER: &str = "t_s, y_m, T_K, p_Pa, c_v_kgm3, c_w_kgm3, S_w";
pub const PROBES_HEADER: &str = "t_s, T_surf_K, T_core_K, moisture_kgm2, massloss_kgm2";
pub const SIGNAL_HEADER: &str = "t_s, value";

/// Writes via a temporary file plus rename, so interrupted runs never
/// leave a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(err)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}

/// Long-format trajectory CSV. Each sample emits the reconstructed
/// surface row at y = 0 (face temperature, Dirichlet pressure) followed by
/// the cell-center rows.
pub fn trajectory_csv(trajectory: &Trajectory, material: &FoodMaterial) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    let capacity = material.water_capacity();
    let centers = trajectory.grid.centers();
    for (state, probe) in trajectory.states.iter().zip(&trajectory.probes) {
        let s_w0 = state.water_conc[0] / capacity;
        let _ = writeln!(
            out,
            "{},0,{},{},{},{},{}",
            probe.time,
            probe.surface_temperature,
            probe.surface_pressure,
            state.vapor_conc[0],
            state.water_conc[0],
            s_w0
        );
        for i in 0..state.n_cells() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                probe.time,
                centers[i],
                state.temperature[i],
                state.pressure[i],
                state.vapor_conc[i],
                state.water_conc[i],
                state.water_conc[i] / capacity
            );
        }
    }
    out
}

/// Scalar probe CSV.
pub fn probes_csv(trajectory: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str(PROBES_HEADER);
    out.push('\n');
    for p in &trajectory.probes {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.time, p.surface_temperature, p.core_temperature, p.moisture, p.mass_loss
        );
    }
    out
}

/// Two-column signal CSV.
pub fn signal_csv(signal: &Signal) -> String {
    let mut out = String::new();
    out.push_str(SIGNAL_HEADER);
    out.push('\n');
    for (k, v) in signal.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", signal.time_at(k), v);
    }
    out
}

fn parse_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ConfigError::single(path.display().to_string(), "empty CSV"))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(names.len());
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                ConfigError::single(
                    path.display().to_string(),
                    format!("line {}: bad number '{}'", lineno + 2, field.trim()),
                )
            })?;
            row.push(v);
        }
        if row.len() != names.len() {
            return Err(ConfigError::single(
                path.display().to_string(),
                format!("line {}: {} fields, expected {}", lineno + 2, row.len(), names.len()),
            )
            .into());
        }
        rows.push(row);
    }
    Ok((names, rows))
}

/// Reads one named column of a CSV with a leading `t_s` time column and
/// returns it as a uniform signal.
pub fn read_signal_column(path: &Path, column: &str) -> Result<Signal, Error> {
    let (names, rows) = parse_csv(path)?;
    let col = names.iter().position(|n| n == column).ok_or_else(|| {
        ConfigError::single(
            path.display().to_string(),
            format!("column '{column}' not found among {names:?}"),
        )
    })?;
    if rows.len() < 2 {
        return Err(ConfigError::single(path.display().to_string(), "need at least 2 rows").into());
    }
    let dt = rows[1][0] - rows[0][0];
    for pair in rows.windows(2) {
        let step = pair[1][0] - pair[0][0];
        if !(step > 0.0) || (step - dt).abs() > 1e-6 * dt.max(1e-9) {
            return Err(ConfigError::single(
                path.display().to_string(),
                format!("time column not uniformly spaced ({step} vs {dt})"),
            )
            .into());
        }
    }
    let values: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    Signal::new(dt, values)
        .map_err(|e: SignalError| ConfigError::single(path.display().to_string(), e.to_string()).into())
}

/// Reads a `t_s, value` signal CSV.
pub fn read_signal_csv(path: &Path) -> Result<Signal, Error> {
    read_signal_column(path, "value")
}
