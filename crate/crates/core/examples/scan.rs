//! Scratch scan of identification hyperparameters on generated pipeline
//! data (expects the channels under the directory given as arg 1).

use cooktwin::io::{read_signal_column, read_signal_csv};
use cooktwin::metrics::rmse;
use cooktwin::sysid::{evaluate, fit_with_trace, FitConfig, InputChannel, TrainingCase, TrainingSet};
use std::path::Path;

fn load(dir: &Path, ids: &[&str], dt: f64) -> TrainingSet {
    let cases = ids
        .iter()
        .map(|id| {
            let input = read_signal_csv(&dir.join(format!("cases/{id}/oven.csv"))).unwrap();
            let output =
                read_signal_column(&dir.join(format!("cases/{id}/probes.csv")), "T_core_K").unwrap();
            let duration = input.duration().min(output.duration());
            let n = (duration / dt).floor() as usize + 1;
            TrainingCase {
                id: id.to_string(),
                input: input.resample(dt, n).unwrap().values().to_vec(),
                output: output.resample(dt, n).unwrap().values().to_vec(),
            }
        })
        .collect();
    TrainingSet { dt, cases }
}

fn main() {
    let dir = std::env::args().nth(1).expect("data dir");
    let dir = Path::new(&dir);
    let train_ids = ["train_0", "train_1", "train_2", "train_3"];
    let eval_ids = ["eval_0", "eval_1", "eval_2", "eval_3", "eval_4"];

    for dt in [40.0] {
        let train = load(dir, &train_ids, dt);
        let eval_set = load(dir, &eval_ids, dt);
        for (lags, input_lags, degree) in [(5usize, 5usize, 2usize), (8, 8, 2), (8, 8, 3)] {
            for (fname, channels) in [
                ("none", vec![]),
                (
                    "exposure",
                    vec![InputChannel::Exposure {
                        surface_tau_s: 1000.0,
                        depletion_tau_s: 4000.0,
                        rate_shape: 1.5,
                    }],
                ),
                (
                    "exp+lp",
                    vec![
                        InputChannel::Exposure {
                            surface_tau_s: 1000.0,
                            depletion_tau_s: 4000.0,
                            rate_shape: 1.5,
                        },
                        InputChannel::Lowpass { tau_s: 2500.0 },
                    ],
                ),
                (
                    "exp2",
                    vec![
                        InputChannel::Exposure {
                            surface_tau_s: 800.0,
                            depletion_tau_s: 3000.0,
                            rate_shape: 1.0,
                        },
                        InputChannel::Exposure {
                            surface_tau_s: 1500.0,
                            depletion_tau_s: 6000.0,
                            rate_shape: 2.0,
                        },
                    ],
                ),
            ] {
                let refine = 40usize;
                let ridge = 1e-8;
                let cfg = FitConfig {
                    output_lags: lags,
                    input_lags,
                    dt,
                    max_degree: degree,
                    ridge,
                    selection_budget: 24,
                    min_improvement_rel: 0.01,
                    sim_refine_iterations: refine,
                    input_channels: channels,
                };
                let start = std::time::Instant::now();
                match fit_with_trace(&train, &cfg) {
                    Ok((model, trace)) => {
                        let wall = start.elapsed().as_secs_f64();
                        let loco = trace.entries.last().map(|e| e.validation_rmse).unwrap();
                        let (mean, worst, max_abs) = match evaluate(&model, &eval_set) {
                            Ok(e) => {
                                let max_abs = e
                                    .cases
                                    .iter()
                                    .map(|c| c.report.max_abs_error)
                                    .fold(0.0f64, f64::max);
                                (e.mean_rmse, e.worst_rmse, max_abs)
                            }
                            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
                        };
                        let s = model.first_predictable();
                        let train_fr: f64 = train
                            .cases
                            .iter()
                            .map(|c| {
                                model
                                    .free_run_values(&c.input, &c.output)
                                    .map(|p| rmse(&c.output[s..], &p[s..]).unwrap())
                                    .unwrap_or(f64::NAN)
                            })
                            .sum::<f64>()
                            / 4.0;
                        println!(
                            "dt={dt:<4} lags={lags}/{input_lags} mu={ridge:<6.0e} f={fname:<14} sem={refine:<3} terms={:<3} wall={wall:5.1}s \
                             trainFR={train_fr:7.3} loco={loco:7.3} eval mean={mean:7.3} worst={worst:7.3} max|e|={max_abs:7.2}",
                            model.terms.len(),
                        );
                    }
                    Err(e) => println!("dt={dt} lags={lags}/{input_lags} mu={ridge}: FAILED {e}"),
                }
            }
        }
    }
}
