//! cooktwin: simulate the cooking full-order model, design excitation
//! signals, identify NARX reduced-order models and run them faster than
//! real time.

use clap::{Parser, Subcommand};
use cooktwin::config::{self, PipelineConfig};
use cooktwin::error::{Error, SysIdError, TwinError};
use cooktwin::fom::simulate;
use cooktwin::{excite, io, pipeline, sysid, twin};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit codes: 0 ok, 2 configuration error, 3 solver failure,
/// 4 identification failure, 5 divergence.
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IDENT: u8 = 4;
const EXIT_DIVERGENCE: u8 = 5;

#[derive(Parser)]
#[command(name = "cooktwin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full-order model of a case and write trajectory + probes.
    Simulate {
        /// Case configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured end time, s.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate an APRBS oven-temperature signal.
    Excite {
        /// Pipeline configuration file (the [excitation] section is used).
        #[arg(long)]
        config: PathBuf,
        /// Seed of the realization; defaults to the configured global seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit nonlinear and linear NARX models from a training manifest.
    Fit {
        /// Pipeline configuration file (the [identification] section is used).
        #[arg(long)]
        config: PathBuf,
        /// Training-set manifest.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Optional timestamp string recorded in the model metadata.
        #[arg(long)]
        timestamp: Option<String>,
    },
    /// Evaluate a model file against the cases of a manifest.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Open-loop prediction of a model on an input signal.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Input signal CSV (t_s, value).
        #[arg(long)]
        input: PathBuf,
        /// Measured-output CSV seeding the warmup (probes CSV or t_s,value).
        #[arg(long)]
        measured: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Benchmark ROM speed against the full-order model.
    Bench {
        /// Case configuration file for the reference FOM run.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Prediction horizon, s (defaults to the case end time).
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Full pipeline: excite, simulate, fit, export, evaluate.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured global seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 4)]
        n_train: usize,
        #[arg(long, default_value_t = 5)]
        n_eval: usize,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io { .. } | Error::Signal(_) | Error::Material(_) => EXIT_CONFIG,
        Error::Solver(_) | Error::Metrics(_) => EXIT_SOLVER,
        Error::SysId(SysIdError::Divergence { .. })
        | Error::Twin(TwinError::SysId(SysIdError::Divergence { .. })) => EXIT_DIVERGENCE,
        Error::SysId(_) => EXIT_IDENT,
        Error::Twin(_) => EXIT_CONFIG,
        Error::Pipeline { source, .. } => exit_code(source),
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { config, t_end, out } => cmd_simulate(&config, t_end, &out),
        Command::Excite { config, seed, out } => cmd_excite(&config, seed, &out),
        Command::Fit { config, manifest, out, timestamp } => {
            cmd_fit(&config, &manifest, &out, timestamp)
        }
        Command::Evaluate { model, manifest, out } => cmd_evaluate(&model, &manifest, &out),
        Command::Predict { model, input, measured, out } => {
            cmd_predict(&model, &input, &measured, &out)
        }
        Command::Bench { config, model, horizon, out } => {
            cmd_bench(&config, &model, horizon, &out)
        }
        Command::Pipeline { config, seed, n_train, n_eval, out } => {
            cmd_pipeline(&config, seed, n_train, n_eval, out)
        }
    }
}

fn cmd_simulate(config: &Path, t_end: Option<f64>, out: &Path) -> Result<(), Error> {
    let case = config::load_case(config)?;
    let t_end = t_end.unwrap_or(case.t_end);
    let trajectory = simulate(
        &case.init,
        &case.grid,
        &case.bc,
        &case.material,
        &case.solver,
        t_end,
        true,
    )?;
    let trajectory_path = out.join("trajectory.csv");
    io::write_atomic(
        &trajectory_path,
        io::trajectory_csv(&trajectory, &case.material).as_bytes(),
    )?;
    let probes_path = out.join("probes.csv");
    io::write_atomic(&probes_path, io::probes_csv(&trajectory).as_bytes())?;
    println!("wrote {} and {}", trajectory_path.display(), probes_path.display());
    let last = trajectory.probes.last().expect("samples");
    println!(
        "t = {} s: T_surf = {:.2} K, T_core = {:.2} K, moisture = {:.4} kg/m2, mass loss = {:.4} kg/m2",
        last.time, last.surface_temperature, last.core_temperature, last.moisture, last.mass_loss
    );
    Ok(())
}

fn cmd_excite(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), Error> {
    let pipeline_cfg = config::load_pipeline(config)?;
    let seed = seed.unwrap_or(pipeline_cfg.seed);
    let spec = pipeline_cfg.excitation.to_spec(seed);
    let signal = excite::generate_aprbs(&spec, pipeline_cfg.excitation.sampling_dt)?;
    let path = out.join(format!("aprbs_{seed}.csv"));
    io::write_atomic(&path, io::signal_csv(&signal).as_bytes())?;
    println!(
        "wrote {} ({} samples, {} s, range [{:.2}, {:.2}] K)",
        path.display(),
        signal.len(),
        signal.duration(),
        signal.min(),
        signal.max()
    );
    Ok(())
}

fn cmd_fit(
    config: &Path,
    manifest: &Path,
    out: &Path,
    timestamp: Option<String>,
) -> Result<(), Error> {
    let pipeline_cfg: PipelineConfig = config::load_pipeline(config)?;
    let training = config::load_training_manifest(manifest)?;
    let (mut model, trace) = sysid::fit_with_trace(&training, &pipeline_cfg.identification)?;
    let mut linear = sysid::fit_linear(&training, &pipeline_cfg.identification)?;
    if let Some(ts) = timestamp {
        model.metadata.fitted_at = ts.clone();
        linear.metadata.fitted_at = ts;
    }
    let nl_path = out.join("rom_nonlinear.dtrom");
    let lin_path = out.join("rom_linear.dtrom");
    twin::export_model(&model, &nl_path)?;
    twin::export_model(&linear, &lin_path)?;

    let mut report = String::from("term,validation_rmse\n");
    for e in &trace.entries {
        report.push_str(&format!("{},{}\n", e.term, e.validation_rmse));
    }
    io::write_atomic(&out.join("fit_trace.csv"), report.as_bytes())?;
    println!(
        "fitted nonlinear model: {} terms, one-step training RMSE {:.4} K -> {}",
        model.terms.len(),
        model.metadata.training_rmse_one_step,
        nl_path.display()
    );
    println!(
        "fitted linear model: {} terms, one-step training RMSE {:.4} K -> {}",
        linear.terms.len(),
        linear.metadata.training_rmse_one_step,
        lin_path.display()
    );
    Ok(())
}

fn cmd_evaluate(model: &Path, manifest: &Path, out: &Path) -> Result<(), Error> {
    let model = twin::import_model(model)?;
    let cases = config::load_training_manifest(manifest)?;
    let evaluation = sysid::evaluate(&model, &cases)?;
    let mut csv = format!("case,{}\n", cooktwin::metrics::ErrorReport::csv_header());
    for case in &evaluation.cases {
        csv.push_str(&format!("{},{}\n", case.id, case.report.csv_row()));
        println!("{}: {}", case.id, case.report);
    }
    println!(
        "mean RMSE {:.4}, worst-case RMSE {:.4}",
        evaluation.mean_rmse, evaluation.worst_rmse
    );
    io::write_atomic(&out.join("evaluation.csv"), csv.as_bytes())?;
    Ok(())
}

fn cmd_predict(model: &Path, input: &Path, measured: &Path, out: &Path) -> Result<(), Error> {
    let model = twin::import_model(model)?;
    let input = io::read_signal_csv(input)?;
    let measured = read_output_channel(measured)?;
    let warmup: Vec<f64> = (0..model.first_predictable())
        .map(|k| measured.sample(k as f64 * model.dt))
        .collect::<Result<_, _>>()
        .map_err(Error::Signal)?;
    let (prediction, report) = twin::predict(&model, &input, &warmup).map_err(Error::Twin)?;
    let path = out.join("prediction.csv");
    io::write_atomic(&path, io::signal_csv(&prediction).as_bytes())?;
    println!("wrote {}", path.display());
    print!("{report}");
    Ok(())
}

/// Accepts either a probes CSV (T_core_K column) or a plain t_s,value CSV.
fn read_output_channel(path: &Path) -> Result<cooktwin::Signal, Error> {
    io::read_signal_column(path, "T_core_K").or_else(|_| io::read_signal_csv(path))
}

fn cmd_bench(
    config: &Path,
    model_path: &Path,
    horizon: Option<f64>,
    out: &Path,
) -> Result<(), Error> {
    let case = config::load_case(config)?;
    let model = twin::import_model(model_path)?;
    let horizon = horizon.unwrap_or(case.t_end);
    let report = twin::bench_speedup(
        &model,
        &case.init,
        &case.grid,
        &case.bc,
        &case.material,
        &case.solver,
        horizon,
        5,
    )?;
    let csv = format!(
        "{}\n{}\n",
        cooktwin::twin::BenchReport::csv_header(),
        report.csv_row()
    );
    io::write_atomic(&out.join("bench.csv"), csv.as_bytes())?;
    io::write_atomic(&out.join("bench.txt"), report.to_string().as_bytes())?;
    print!("{report}");
    Ok(())
}

fn cmd_pipeline(
    config: &Path,
    seed: Option<u64>,
    n_train: usize,
    n_eval: usize,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let mut pipeline_cfg = config::load_pipeline(config)?;
    if let Some(seed) = seed {
        pipeline_cfg.seed = seed;
    }
    if let Some(out) = out {
        pipeline_cfg.output_dir = out;
    }
    let outcome = pipeline::run_pipeline(&pipeline_cfg, n_train, n_eval)?;
    println!(
        "pipeline complete: {} and {}",
        outcome.nonlinear_path.display(),
        outcome.linear_path.display()
    );
    if let (Some(nl), Some(ratio)) = (&outcome.nonlinear_eval, outcome.rmse_ratio) {
        println!(
            "unseen-suite mean RMSE: nonlinear {:.4} K, linear/nonlinear ratio {:.2}",
            nl.mean_rmse, ratio
        );
    }
    println!("report: {}", outcome.report_path.display());
    Ok(())
}
