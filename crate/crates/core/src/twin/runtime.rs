//! Faster-than-real-time ROM execution: instrumented prediction, scenario
//! fan-out and FOM-vs-ROM speed benchmarks.

use crate::error::TwinError;
use crate::fom::{simulate, BoundarySpec, FieldState, Grid1D, SolveConfig};
use crate::material::FoodMaterial;
use crate::signal::Signal;
use crate::sysid::NarxModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Timing summary of a prediction workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Real-time span predicted, s.
    pub horizon: f64,
    /// ROM wall time, s (median over `repetitions`).
    pub wall_time: f64,
    /// `horizon / wall_time`.
    pub speedup_vs_realtime: f64,
    /// Throughput scaled to one-hour-horizon predictions per minute.
    pub predictions_per_minute_1h: f64,
    /// Timing repetitions behind `wall_time` (median, monotonic clock).
    pub repetitions: usize,
    /// Wall time of the full-order reference run, when one was made.
    pub fom_wall_time: Option<f64>,
    /// `fom_wall_time / wall_time`, when a reference run was made.
    pub speedup_vs_fom: Option<f64>,
}

impl BenchReport {
    fn from_wall(horizon: f64, wall: f64, repetitions: usize) -> Self {
        let wall = wall.max(1e-9);
        BenchReport {
            horizon,
            wall_time: wall,
            speedup_vs_realtime: horizon / wall,
            predictions_per_minute_1h: 60.0 / (wall * 3600.0 / horizon),
            repetitions,
            fom_wall_time: None,
            speedup_vs_fom: None,
        }
    }

    pub fn csv_header() -> &'static str {
        "horizon_s,wall_time_s,speedup_vs_realtime,predictions_per_minute_1h,repetitions,fom_wall_time_s,speedup_vs_fom"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.horizon,
            self.wall_time,
            self.speedup_vs_realtime,
            self.predictions_per_minute_1h,
            self.repetitions,
            opt(self.fom_wall_time),
            opt(self.speedup_vs_fom)
        )
    }
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "predicted {:.0} s of real time in {:.4} s wall time (median of {} runs)",
            self.horizon, self.wall_time, self.repetitions
        )?;
        writeln!(f, "speedup vs real time: {:.0}x", self.speedup_vs_realtime)?;
        writeln!(
            f,
            "one-hour-horizon predictions per minute: {:.0}",
            self.predictions_per_minute_1h
        )?;
        if let (Some(fom), Some(s)) = (self.fom_wall_time, self.speedup_vs_fom) {
            writeln!(f, "full-order model wall time: {fom:.2} s -> speedup vs FOM: {s:.0}x")?;
        }
        Ok(())
    }
}

/// Open-loop prediction with wall-clock instrumentation; the output is
/// identical to [`NarxModel::free_run`] on the same inputs.
pub fn predict(
    model: &NarxModel,
    input: &Signal,
    warmup: &[f64],
) -> Result<(Signal, BenchReport), TwinError> {
    let start = Instant::now();
    let output = model.free_run(input, warmup)?;
    let wall = start.elapsed().as_secs_f64();
    Ok((output, BenchReport::from_wall(input.duration(), wall, 1)))
}

/// Runs `m` candidate inputs through the model concurrently. Results keep
/// the input order; a diverging candidate is reported in its slot without
/// failing the others.
pub fn scenario_fanout(
    model: &NarxModel,
    inputs: &[Signal],
    warmup: &[f64],
) -> Result<(Vec<Result<Signal, TwinError>>, BenchReport), TwinError> {
    if inputs.is_empty() {
        return Err(TwinError::ZeroHorizon);
    }
    let start = Instant::now();
    let outputs: Vec<Result<Signal, TwinError>> = inputs
        .par_iter()
        .map(|input| model.free_run(input, warmup).map_err(TwinError::from))
        .collect();
    let wall = start.elapsed().as_secs_f64().max(1e-9);
    let horizon = inputs[0].duration();
    let per_prediction = wall / inputs.len() as f64;
    let mut report = BenchReport::from_wall(horizon, per_prediction, 1);
    report.repetitions = inputs.len();
    Ok((outputs, report))
}

/// Benchmarks the ROM against the full-order model on the same physical
/// case. The FOM runs once; the ROM prediction is timed as the median of
/// `repetitions` runs on a monotonic clock, warm cache.
#[allow(clippy::too_many_arguments)]
pub fn bench_speedup(
    model: &NarxModel,
    init: &FieldState,
    grid: &Grid1D,
    bc: &BoundarySpec,
    material: &FoodMaterial,
    cfg: &SolveConfig,
    horizon: f64,
    repetitions: usize,
) -> Result<BenchReport, crate::Error> {
    if !(horizon > 0.0) {
        return Err(crate::Error::Twin(TwinError::ZeroHorizon));
    }
    let reps = repetitions.max(1);

    let fom_start = Instant::now();
    let trajectory = simulate(init, grid, bc, material, cfg, horizon, false)?;
    let fom_wall = fom_start.elapsed().as_secs_f64();

    // Co-sample the oven input and seed the warmup from the FOM probes.
    let n_steps = (horizon / model.dt).floor() as usize + 1;
    let mut input_values = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let t = k as f64 * model.dt;
        input_values.push(
            bc.oven_temperature
                .value_at(t)
                .map_err(|e| crate::Error::Twin(TwinError::Parse(e.to_string())))?,
        );
    }
    let input =
        Signal::new(model.dt, input_values).map_err(|e| crate::Error::Twin(TwinError::Parse(e.to_string())))?;
    let warmup: Vec<f64> = (0..model.first_predictable())
        .map(|k| {
            let t = k as f64 * model.dt;
            interpolate_probe(&trajectory.probe_times(), &trajectory.core_temperature_series(), t)
        })
        .collect();

    let mut walls = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let _ = model.free_run(&input, &warmup).map_err(TwinError::from)?;
        walls.push(start.elapsed().as_secs_f64());
    }
    walls.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let median = walls[walls.len() / 2];

    let mut report = BenchReport::from_wall(horizon, median, reps);
    report.fom_wall_time = Some(fom_wall);
    report.speedup_vs_fom = Some(fom_wall / report.wall_time);
    Ok(report)
}

fn interpolate_probe(times: &[f64], values: &[f64], t: f64) -> f64 {
    match times.binary_search_by(|x| x.partial_cmp(&t).expect("finite")) {
        Ok(i) => values[i],
        Err(i) if i == 0 => values[0],
        Err(i) if i >= times.len() => *values.last().expect("nonempty"),
        Err(i) => {
            let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
            values[i - 1] + w * (values[i] - values[i - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysid::{ModelMetadata, Normalization, Term};

    fn tiny_model() -> NarxModel {
        NarxModel {
            output_lags: 2,
            input_lags: 2,
            dt: 10.0,
            input_filters: vec![],
            terms: vec![Term::parse("y1", 2, 2, 0).unwrap(), Term::parse("u0", 2, 2, 0).unwrap()],
            coefficients: vec![0.9, 0.1],
            normalization: Normalization::identity(),
            output_min: -100.0,
            output_max: 100.0,
            metadata: ModelMetadata {
                training_cases: vec![],
                fitted_at: String::new(),
                ridge_fallback: false,
                training_rmse_one_step: 0.0,
            },
        }
    }

    fn ramp_input(n: usize) -> Signal {
        Signal::new(10.0, (0..n).map(|k| (k as f64 * 0.05).sin()).collect()).unwrap()
    }

    #[test]
    fn predict_output_matches_free_run() {
        let model = tiny_model();
        let input = ramp_input(1001);
        let warmup = [0.0, 0.0];
        let (out, report) = predict(&model, &input, &warmup).unwrap();
        let reference = model.free_run(&input, &warmup).unwrap();
        assert_eq!(out, reference);
        assert!(report.wall_time > 0.0);
        assert_eq!(out.len(), 1001);
    }

    #[test]
    fn ten_thousand_second_horizon_is_a_thousand_steps() {
        // 10000 s at dt = 10 s: 1000 prediction steps past the first sample.
        let input = ramp_input(1001);
        assert_eq!(input.duration(), 10_000.0);
        assert_eq!(input.len() - 1, 1000);
    }

    #[test]
    fn fanout_of_one_equals_predict() {
        let model = tiny_model();
        let input = ramp_input(101);
        let warmup = [0.0, 0.0];
        let (single, _) = predict(&model, &input, &warmup).unwrap();
        let (many, report) = scenario_fanout(&model, &[input], &warmup).unwrap();
        assert_eq!(many.len(), 1);
        assert_eq!(many[0].as_ref().unwrap(), &single);
        assert_eq!(report.repetitions, 1);
    }

    #[test]
    fn identical_candidates_give_identical_outputs_in_order() {
        let model = tiny_model();
        let inputs = vec![ramp_input(101); 8];
        let warmup = [0.0, 0.0];
        let (outs, _) = scenario_fanout(&model, &inputs, &warmup).unwrap();
        let first = outs[0].as_ref().unwrap().clone();
        for o in &outs {
            assert_eq!(o.as_ref().unwrap(), &first);
        }
    }

    #[test]
    fn diverging_candidate_is_isolated() {
        let mut model = tiny_model();
        model.coefficients = vec![3.0, 0.0];
        model.output_min = -1.0;
        model.output_max = 1.0;
        let good = Signal::new(10.0, vec![0.0; 101]).unwrap();
        let (outs, _) = scenario_fanout(&model, &[good.clone(), good.clone()], &[0.5, 0.5])
            .unwrap();
        // Both diverge the same way here; the point is that errors arrive
        // per slot instead of aborting the batch.
        assert_eq!(outs.len(), 2);
        for o in outs {
            assert!(o.is_err());
        }
    }

    #[test]
    fn empty_fanout_rejected() {
        let model = tiny_model();
        assert!(scenario_fanout(&model, &[], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn report_identities_hold() {
        let r = BenchReport::from_wall(10_000.0, 0.5, 5);
        assert!((r.speedup_vs_realtime - 20_000.0).abs() < 1e-9);
        // 0.5 s per 10000 s -> 0.18 s per hour -> 333.3 per minute.
        assert!((r.predictions_per_minute_1h - 60.0 / 0.18).abs() < 1e-6);
    }
}
