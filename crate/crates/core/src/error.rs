//! Error types shared across the crate.

use thiserror::Error;

/// Domain errors from constitutive relations and state validation.
#[derive(Debug, Clone, Error)]
pub enum MaterialError {
    #[error("water concentration {value} kg/m3 outside [0, {max}] kg/m3{}", cell_suffix(*.cell))]
    WaterConcentrationOutOfRange {
        value: f64,
        max: f64,
        cell: Option<usize>,
    },
    #[error("nonpositive pressure {0} Pa in ideal-gas density")]
    NonpositivePressure(f64),
    #[error("nonpositive temperature {0} K")]
    NonpositiveTemperature(f64),
    #[error("temperature {0} K outside saturation-pressure domain [{1}, {2}] K")]
    SaturationPressureDomain(f64, f64, f64),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid state in cell {cell}: {reason}")]
    InvalidState { cell: usize, reason: String },
}

fn cell_suffix(cell: Option<usize>) -> String {
    match cell {
        Some(i) => format!(" (cell {i})"),
        None => String::new(),
    }
}

/// Failures of the full-order solver.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("non-finite {quantity} at cell {cell}")]
    NonFinite { quantity: String, cell: usize },
    #[error(
        "time step underflow at t = {t} s: dt_min = {dt_min} s reached without convergence \
         (last scaled residual {residual:.3e})"
    )]
    TimeStepUnderflow { t: f64, dt_min: f64, residual: f64 },
    #[error("solver failed at t = {t} s: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<SolverError>,
    },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("invalid solver setup: {0}")]
    Setup(String),
}

/// Errors from metric computations.
#[derive(Debug, Clone, Error)]
pub enum MetricsError {
    #[error("series length mismatch: reference has {0} samples, forecast {1}")]
    LengthMismatch(usize, usize),
    #[error("empty series")]
    Empty,
    #[error("reference + forecast sums to zero at sample {0}; symmetric MAPE undefined")]
    ZeroSumSample(usize),
}

/// Errors from signal generation and sampling.
#[derive(Debug, Clone, Error)]
pub enum SignalError {
    #[error("invalid APRBS spec: {0}")]
    InvalidSpec(String),
    #[error(
        "sampling interval {dt} s too coarse: fastest transition half-period {half_period} s \
         needs dt <= {max_dt} s"
    )]
    SamplingTooCoarse { dt: f64, half_period: f64, max_dt: f64 },
    #[error("time {t} s outside signal domain [0, {end}] s")]
    OutOfDomain { t: f64, end: f64 },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
}

/// Errors from NARX identification and simulation.
#[derive(Debug, Clone, Error)]
pub enum SysIdError {
    #[error("series too short: {len} samples, need more than {min} for the requested lags")]
    SeriesTooShort { len: usize, min: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training pairs have mismatched lengths or sampling intervals: {0}")]
    InconsistentTrainingSet(String),
    #[error("free run diverged at step {step}: |y| = {value:.3e} exceeds bound {bound:.3e}")]
    Divergence { step: usize, value: f64, bound: f64 },
    #[error("warmup has {got} samples, need at least {need}")]
    WarmupTooShort { got: usize, need: usize },
    #[error("normal equations singular even with ridge fallback")]
    Singular,
    #[error("invalid identification config: {0}")]
    InvalidConfig(String),
}

/// Errors around `.dtrom` model files and the twin runtime.
#[derive(Debug, Clone, Error)]
pub enum TwinError {
    #[error("not a dtrom file: {0}")]
    BadMagic(String),
    #[error("unsupported dtrom version {found}; this build reads version {supported}")]
    Version { found: String, supported: u32 },
    #[error("checksum failure: {0}")]
    Checksum(String),
    #[error("model file parse error: {0}")]
    Parse(String),
    #[error("zero-length benchmark horizon")]
    ZeroHorizon,
    #[error(transparent)]
    SysId(#[from] SysIdError),
}

/// Configuration-file errors. `problems` lists every offending key found.
#[derive(Debug, Clone, Error)]
#[error("invalid configuration {path}:\n{}", problems.join("\n"))]
pub struct ConfigError {
    pub path: String,
    pub problems: Vec<String>,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, problems: Vec<String>) -> Self {
        Self { path: path.into(), problems }
    }

    pub fn single(path: impl Into<String>, problem: impl Into<String>) -> Self {
        Self::new(path, vec![problem.into()])
    }
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    SysId(#[from] SysIdError),
    #[error(transparent)]
    Twin(#[from] TwinError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pipeline stage '{stage}' failed on case '{case}': {source}")]
    Pipeline {
        stage: String,
        case: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
