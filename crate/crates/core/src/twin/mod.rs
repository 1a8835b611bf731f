//! ROM runtime: portable model serialization, instrumented prediction,
//! scenario fan-out and speed benchmarking.

mod model_file;
mod runtime;

pub use model_file::{
    export_model, from_dtrom_string, import_model, to_dtrom_string, ModelFile, DTROM_VERSION,
};
pub use runtime::{bench_speedup, predict, scenario_fanout, BenchReport};
