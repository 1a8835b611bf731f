//! Scratch diagnostics for the ROM quality problem.

use cooktwin::config::load_case;
use cooktwin::excite::{generate_aprbs, AprbsSpec};
use cooktwin::fom::simulate;
use cooktwin::io::{read_signal_column, read_signal_csv};
use cooktwin::metrics::rmse;
use cooktwin::signal::{Forcing, Signal};
use cooktwin::sysid::{fit_linear, fit_with_trace, FitConfig, TrainingCase, TrainingSet};
use std::path::Path;

fn load_case_channels(dir: &Path, id: &str, dt: f64) -> TrainingCase {
    let input = read_signal_csv(&dir.join(format!("cases/{id}/oven.csv"))).unwrap();
    let output = read_signal_column(&dir.join(format!("cases/{id}/probes.csv")), "T_core_K").unwrap();
    let duration = input.duration().min(output.duration());
    let n = (duration / dt).floor() as usize + 1;
    TrainingCase {
        id: id.to_string(),
        input: input.resample(dt, n).unwrap().values().to_vec(),
        output: output.resample(dt, n).unwrap().values().to_vec(),
    }
}

fn train_free_run(model: &cooktwin::sysid::NarxModel, case: &TrainingCase) -> f64 {
    let s = model.first_predictable();
    match model.free_run_values(&case.input, &case.output) {
        Ok(p) => rmse(&case.output[s..], &p[s..]).unwrap(),
        Err(_) => f64::NAN,
    }
}

fn main() {
    let dir = std::env::args().nth(1).expect("data dir");
    let dir = Path::new(&dir);
    let dt = 20.0;

    // 1. Single-case overfit: can the model class represent one
    //    realization at all?
    println!("--- single-case overfit (train and free-run on train_0) ---");
    let one = TrainingSet { dt, cases: vec![load_case_channels(dir, "train_0", dt)] };
    for (lags, degree, budget) in [(5usize, 2usize, 24usize), (8, 2, 40), (8, 3, 40)] {
        let cfg = FitConfig {
            output_lags: lags,
            input_lags: lags,
            dt,
            max_degree: degree,
            ridge: 1e-8,
            selection_budget: budget,
            min_improvement_rel: 0.005,
                    sim_refine_iterations: 40,
            input_channels: vec![],
        };
        match fit_with_trace(&one, &cfg) {
            Ok((model, trace)) => println!(
                "lags={lags} deg={degree}: terms={} trainFR={:.3} K (selection steps {})",
                model.terms.len(),
                train_free_run(&model, &one.cases[0]),
                trace.entries.len() - 1
            ),
            Err(e) => println!("lags={lags} deg={degree}: {e}"),
        }
    }

    // 2. Early-window fit: restrict everything to the first 4000 s where
    //    the slab is still wet (small hysteresis drift).
    println!("--- early-window (first 4000 s) train on 4, eval on 5 ---");
    let cut = (4000.0 / dt) as usize + 1;
    let clip = |mut c: TrainingCase| {
        c.input.truncate(cut);
        c.output.truncate(cut);
        c
    };
    let train = TrainingSet {
        dt,
        cases: ["train_0", "train_1", "train_2", "train_3"]
            .iter()
            .map(|id| clip(load_case_channels(dir, id, dt)))
            .collect(),
    };
    let eval_cases: Vec<TrainingCase> = ["eval_0", "eval_1", "eval_2", "eval_3", "eval_4"]
        .iter()
        .map(|id| clip(load_case_channels(dir, id, dt)))
        .collect();
    for degree in [1usize, 2, 3] {
        let cfg = FitConfig {
            output_lags: 5,
            input_lags: 5,
            dt,
            max_degree: degree,
            ridge: 1e-8,
            selection_budget: 24,
            min_improvement_rel: 0.01,
                    sim_refine_iterations: 40,
            input_channels: vec![],
        };
        let model = if degree == 1 {
            fit_linear(&train, &cfg).unwrap()
        } else {
            fit_with_trace(&train, &cfg).unwrap().0
        };
        let train_fr: f64 =
            train.cases.iter().map(|c| train_free_run(&model, c)).sum::<f64>() / 4.0;
        let eval_fr: Vec<f64> = eval_cases.iter().map(|c| train_free_run(&model, c)).collect();
        println!(
            "deg={degree}: terms={} trainFR={train_fr:.3} evalFR={:?}",
            model.terms.len(),
            eval_fr.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }

    // 3. Small-amplitude linear sanity: oven 300..320 K with evaporation
    //    practically inert -> the FOM is nearly linear; a linear ARX must
    //    free-run to well under 0.1 K.
    println!("--- small-amplitude linearity check ---");
    let case_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/benchmark.toml");
    let case = load_case(&case_path).unwrap();
    let make = |seed: u64| -> TrainingCase {
        let spec = AprbsSpec {
            level_low: 300.0,
            level_high: 320.0,
            min_hold: 500.0,
            freq_low: 0.0017,
            freq_high: 0.0017,
            duration: 8000.0,
            seed,
        };
        let oven = generate_aprbs(&spec, 10.0).unwrap();
        let bc = cooktwin::fom::BoundarySpec {
            oven_temperature: Forcing::Sampled(oven.clone()),
            ..case.bc.clone()
        };
        let traj =
            simulate(&case.init, &case.grid, &bc, &case.material, &case.solver, oven.duration(), false)
                .unwrap();
        let probes = Signal::new(1.0, traj.core_temperature_series()).unwrap();
        let n = (oven.duration() / dt) as usize + 1;
        TrainingCase {
            id: format!("small{seed}"),
            input: oven.resample(dt, n).unwrap().values().to_vec(),
            output: probes.resample(dt, n).unwrap().values().to_vec(),
        }
    };
    let train = TrainingSet { dt, cases: (0..3).map(|s| make(s)).collect() };
    let test = make(99);
    let cfg = FitConfig {
        output_lags: 5,
        input_lags: 5,
        dt,
        max_degree: 1,
        ridge: 1e-8,
        selection_budget: 0,
        min_improvement_rel: 0.01,
                    sim_refine_iterations: 40,
            input_channels: vec![],
    };
    let model = fit_linear(&train, &cfg).unwrap();
    println!(
        "linear ARX small-amplitude: trainFR={:.4} K, testFR={:.4} K",
        train.cases.iter().map(|c| train_free_run(&model, c)).sum::<f64>() / 3.0,
        train_free_run(&model, &test)
    );
}
