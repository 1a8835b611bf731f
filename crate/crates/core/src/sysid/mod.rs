//! NARX grey-box system identification.
//!
//! Models regress the normalized output on lagged outputs and inputs
//! through a polynomial basis; coefficients come from ridge least squares
//! and nonlinear terms are added by greedy forward selection scored on
//! leave-one-case-out free-run error.

mod basis;
mod fit;

pub use basis::{monomials, Term};
pub use fit::{fit, fit_linear, fit_with_trace, SelectionTrace, TraceEntry};

use crate::error::SysIdError;
use crate::metrics::ErrorReport;
use crate::signal::Signal;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Affine per-channel normalization applied before basis evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub output_center: f64,
    pub output_scale: f64,
    pub input_center: f64,
    pub input_scale: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Self { output_center: 0.0, output_scale: 1.0, input_center: 0.0, input_scale: 1.0 }
    }

    fn from_channels(outputs: &[f64], inputs: &[f64]) -> Self {
        let (yc, ys) = center_scale(outputs);
        let (uc, us) = center_scale(inputs);
        Self { output_center: yc, output_scale: ys, input_center: uc, input_scale: us }
    }

    #[inline]
    pub fn normalize_output(&self, y: f64) -> f64 {
        (y - self.output_center) / self.output_scale
    }

    #[inline]
    pub fn denormalize_output(&self, y: f64) -> f64 {
        self.output_center + self.output_scale * y
    }

    #[inline]
    pub fn normalize_input(&self, u: f64) -> f64 {
        (u - self.input_center) / self.input_scale
    }
}

fn center_scale(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    // Constant channels keep unit scale so their features become zero.
    if std > 1e-12 * mean.abs().max(1.0) {
        (mean, std)
    } else {
        (mean, 1.0)
    }
}

/// Identification configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Output lag count n_a.
    pub output_lags: usize,
    /// Input lag count n_b (lags `u(k) .. u(k-n_b+1)`).
    pub input_lags: usize,
    /// Sampling interval of the co-sampled training data, s.
    pub dt: f64,
    /// Maximum total degree of basis terms.
    pub max_degree: usize,
    /// Ridge parameter on normalized features.
    pub ridge: f64,
    /// Maximum number of nonlinear terms added by forward selection.
    pub selection_budget: usize,
    /// Stop when the relative validation improvement drops below this.
    pub min_improvement_rel: f64,
    /// Levenberg-Marquardt iterations refining the final coefficients on
    /// the free-run (simulation) error; 0 keeps the plain one-step ridge
    /// least-squares solution.
    pub sim_refine_iterations: usize,
    /// Input-derived grey-box channels added as extra regressor variables
    /// `z0, z1, ..`. They depend on the input alone, so they stay exact in
    /// free runs and let the basis observe slow process drift (internal
    /// degrees of freedom in the spirit of grey-box ODE ansatzes).
    pub input_channels: Vec<InputChannel>,
}

/// An auxiliary regressor channel computed from the normalized input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputChannel {
    /// First-order low-pass `z(k) = a z(k-1) + (1-a) u(k)` with
    /// `a = exp(-dt/tau_s)`, seeded at the first input sample.
    Lowpass { tau_s: f64 },
    /// Saturating exposure integral: a low-pass `w` of the input (time
    /// constant `surface_tau_s`) drives `z` through an exponential rate,
    /// `z(k) = min(1, z(k-1) + dt/depletion_tau_s * exp(rate_shape * w))`.
    /// Approximates cumulative thermal exposure such as moisture
    /// depletion.
    Exposure { surface_tau_s: f64, depletion_tau_s: f64, rate_shape: f64 },
}

impl InputChannel {
    pub fn validate(&self) -> Result<(), SysIdError> {
        let ok = match self {
            InputChannel::Lowpass { tau_s } => *tau_s > 0.0,
            InputChannel::Exposure { surface_tau_s, depletion_tau_s, rate_shape } => {
                *surface_tau_s > 0.0 && *depletion_tau_s > 0.0 && rate_shape.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SysIdError::InvalidConfig(format!("invalid input channel {self:?}")))
        }
    }

    /// Evaluates the channel over a normalized input series.
    pub(crate) fn compute(&self, u_norm: &[f64], dt: f64) -> Vec<f64> {
        match *self {
            InputChannel::Lowpass { tau_s } => {
                let alpha = (-dt / tau_s).exp();
                let mut state = *u_norm.first().unwrap_or(&0.0);
                u_norm
                    .iter()
                    .map(|&u| {
                        state = alpha * state + (1.0 - alpha) * u;
                        state
                    })
                    .collect()
            }
            InputChannel::Exposure { surface_tau_s, depletion_tau_s, rate_shape } => {
                let alpha = (-dt / surface_tau_s).exp();
                let mut w = *u_norm.first().unwrap_or(&0.0);
                let mut z = 0.0f64;
                u_norm
                    .iter()
                    .map(|&u| {
                        w = alpha * w + (1.0 - alpha) * u;
                        z = (z + dt / depletion_tau_s * (rate_shape * w).exp()).min(1.0);
                        z
                    })
                    .collect()
            }
        }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            output_lags: 5,
            input_lags: 5,
            dt: 10.0,
            max_degree: 3,
            ridge: 1e-8,
            selection_budget: 24,
            min_improvement_rel: 0.01,
            sim_refine_iterations: 40,
            input_channels: Vec::new(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), SysIdError> {
        if self.output_lags == 0 || self.input_lags == 0 {
            return Err(SysIdError::InvalidConfig("lag counts must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(SysIdError::InvalidConfig("sampling interval must be > 0".into()));
        }
        if self.max_degree == 0 {
            return Err(SysIdError::InvalidConfig("max degree must be >= 1".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(SysIdError::InvalidConfig("ridge must be >= 0".into()));
        }
        for channel in &self.input_channels {
            channel.validate()?;
        }
        Ok(())
    }

    /// First predictable sample index: every lag must be available.
    pub fn first_predictable(&self) -> usize {
        self.output_lags.max(self.input_lags.saturating_sub(1))
    }
}

/// One co-sampled input/output record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCase {
    pub id: String,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

/// A set of co-sampled training cases sharing one sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub dt: f64,
    pub cases: Vec<TrainingCase>,
}

impl TrainingSet {
    pub fn validate(&self, min_len: usize) -> Result<(), SysIdError> {
        if self.cases.is_empty() {
            return Err(SysIdError::EmptyTrainingSet);
        }
        for case in &self.cases {
            if case.input.len() != case.output.len() {
                return Err(SysIdError::InconsistentTrainingSet(format!(
                    "case '{}': input has {} samples, output {}",
                    case.id,
                    case.input.len(),
                    case.output.len()
                )));
            }
            if case.output.len() <= min_len {
                return Err(SysIdError::SeriesTooShort {
                    len: case.output.len(),
                    min: min_len,
                });
            }
        }
        Ok(())
    }
}

/// Model metadata carried through serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub training_cases: Vec<String>,
    /// Left empty by deterministic pipelines; callers may stamp it.
    pub fitted_at: String,
    /// Set when the ridge parameter had to be raised to factor the normal
    /// equations.
    pub ridge_fallback: bool,
    /// One-step-ahead residual RMSE on the training rows, original units.
    pub training_rmse_one_step: f64,
}

/// A fitted NARX model.
#[derive(Debug, Clone, PartialEq)]
pub struct NarxModel {
    pub output_lags: usize,
    pub input_lags: usize,
    /// Sampling interval, s.
    pub dt: f64,
    /// Input-derived auxiliary regressor channels.
    pub input_channels: Vec<InputChannel>,
    pub terms: Vec<Term>,
    pub coefficients: Vec<f64>,
    pub normalization: Normalization,
    /// Output range seen in training, original units; bounds the
    /// divergence guard of free runs.
    pub output_min: f64,
    pub output_max: f64,
    pub metadata: ModelMetadata,
}

/// In-original-units coefficients of a purely linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoefficients {
    pub intercept: f64,
    /// Coefficient of `y(k-1) .. y(k-n_a)`.
    pub output: Vec<f64>,
    /// Coefficient of `u(k) .. u(k-n_b+1)`.
    pub input: Vec<f64>,
}

impl NarxModel {
    pub fn n_vars(&self) -> usize {
        self.output_lags + self.input_lags + self.input_channels.len()
    }

    pub fn first_predictable(&self) -> usize {
        self.output_lags.max(self.input_lags.saturating_sub(1))
    }

    fn divergence_bound(&self) -> f64 {
        let width = self.output_max - self.output_min;
        10.0 * width.max(self.output_min.abs()).max(self.output_max.abs()).max(1e-6)
    }

    /// Recursive open-loop simulation: past predictions are fed back as
    /// output lags. The first `first_predictable()` samples come from
    /// `warmup` (measured output).
    pub fn free_run_values(&self, input: &[f64], warmup: &[f64]) -> Result<Vec<f64>, SysIdError> {
        let start = self.first_predictable();
        if warmup.len() < start {
            return Err(SysIdError::WarmupTooShort { got: warmup.len(), need: start });
        }
        if input.len() <= start {
            return Err(SysIdError::SeriesTooShort { len: input.len(), min: start });
        }
        let u_norm: Vec<f64> =
            input.iter().map(|&u| self.normalization.normalize_input(u)).collect();
        let filters = filtered_channels(&u_norm, self.dt, &self.input_channels);
        let mut y_norm: Vec<f64> = warmup[..start]
            .iter()
            .map(|&y| self.normalization.normalize_output(y))
            .collect();
        let mut out: Vec<f64> = warmup[..start].to_vec();
        let bound = self.divergence_bound();
        let mut lags = vec![0.0; self.n_vars()];
        for k in start..input.len() {
            fill_lag_vector(&mut lags, &y_norm, &u_norm, &filters, k, self.output_lags, self.input_lags);
            let mut acc = 0.0;
            for (term, coeff) in self.terms.iter().zip(&self.coefficients) {
                acc += coeff * term.eval(&lags);
            }
            let y = self.normalization.denormalize_output(acc);
            if !y.is_finite() || y.abs() > bound {
                return Err(SysIdError::Divergence { step: k, value: y, bound });
            }
            y_norm.push(acc);
            out.push(y);
        }
        Ok(out)
    }

    /// [`NarxModel::free_run_values`] on a [`Signal`], checking co-sampling.
    pub fn free_run(&self, input: &Signal, warmup: &[f64]) -> Result<Signal, SysIdError> {
        if (input.dt() - self.dt).abs() > 1e-9 * self.dt {
            return Err(SysIdError::InvalidConfig(format!(
                "input sampled at {} s but the model expects {} s",
                input.dt(),
                self.dt
            )));
        }
        let values = self.free_run_values(input.values(), warmup)?;
        Signal::new(self.dt, values).map_err(|e| SysIdError::InvalidConfig(e.to_string()))
    }

    /// Original-units coefficients when every term has degree <= 1 and no
    /// filtered channel is used.
    pub fn linear_coefficients(&self) -> Option<LinearCoefficients> {
        let n_plain = self.output_lags + self.input_lags;
        if self.terms.iter().any(|t| {
            t.degree() > 1 || t.exponents().iter().skip(n_plain).any(|&e| e > 0)
        }) {
            return None;
        }
        let n = self.normalization;
        let mut intercept = 0.0;
        let mut output = vec![0.0; self.output_lags];
        let mut input = vec![0.0; self.input_lags];
        for (term, &theta) in self.terms.iter().zip(&self.coefficients) {
            if term.degree() == 0 {
                intercept += n.output_scale * theta;
                continue;
            }
            let var = term.exponents().iter().position(|&e| e == 1).expect("degree-1 term");
            if var < self.output_lags {
                output[var] += theta;
                intercept -= theta * n.output_center;
            } else {
                let ratio = n.output_scale / n.input_scale;
                input[var - self.output_lags] += theta * ratio;
                intercept -= theta * ratio * n.input_center;
            }
        }
        intercept += n.output_center;
        Some(LinearCoefficients { intercept, output, input })
    }
}

/// Evaluates every auxiliary channel over a normalized input series.
pub(crate) fn filtered_channels(
    u_norm: &[f64],
    dt: f64,
    channels: &[InputChannel],
) -> Vec<Vec<f64>> {
    channels.iter().map(|c| c.compute(u_norm, dt)).collect()
}

#[inline]
pub(crate) fn fill_lag_vector(
    lags: &mut [f64],
    y_norm: &[f64],
    u_norm: &[f64],
    filters: &[Vec<f64>],
    k: usize,
    output_lags: usize,
    input_lags: usize,
) {
    for j in 0..output_lags {
        lags[j] = y_norm[k - 1 - j];
    }
    for j in 0..input_lags {
        lags[output_lags + j] = u_norm[k - j];
    }
    for (j, channel) in filters.iter().enumerate() {
        lags[output_lags + input_lags + j] = channel[k];
    }
}

/// Builds the design matrix and target vector of one co-sampled pair:
/// one row per predictable sample, features are the basis terms on the
/// normalized lag window, targets the normalized output.
pub fn build_regressors(
    output: &[f64],
    input: &[f64],
    config: &FitConfig,
    terms: &[Term],
    norm: &Normalization,
) -> Result<(DMatrix<f64>, DVector<f64>), SysIdError> {
    if output.len() != input.len() {
        return Err(SysIdError::InconsistentTrainingSet(format!(
            "output has {} samples, input {}",
            output.len(),
            input.len()
        )));
    }
    let output_lags = config.output_lags;
    let input_lags = config.input_lags;
    let start = config.first_predictable();
    if output.len() <= start {
        return Err(SysIdError::SeriesTooShort { len: output.len(), min: start });
    }
    let y_norm: Vec<f64> = output.iter().map(|&y| norm.normalize_output(y)).collect();
    let u_norm: Vec<f64> = input.iter().map(|&u| norm.normalize_input(u)).collect();
    let filters = filtered_channels(&u_norm, config.dt, &config.input_channels);
    let rows = output.len() - start;
    let mut phi = DMatrix::zeros(rows, terms.len());
    let mut target = DVector::zeros(rows);
    let mut lags = vec![0.0; output_lags + input_lags + filters.len()];
    for (row, k) in (start..output.len()).enumerate() {
        fill_lag_vector(&mut lags, &y_norm, &u_norm, &filters, k, output_lags, input_lags);
        for (col, term) in terms.iter().enumerate() {
            phi[(row, col)] = term.eval(&lags);
        }
        target[row] = y_norm[k];
    }
    Ok((phi, target))
}

/// Per-case evaluation of a model on co-sampled cases.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cases: Vec<CaseEvaluation>,
    pub worst_rmse: f64,
    pub mean_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct CaseEvaluation {
    pub id: String,
    pub report: ErrorReport,
}

/// Free-runs the model on every case and reports the error metrics past
/// the warmup window; the worst-case RMSE is aggregated.
pub fn evaluate(model: &NarxModel, cases: &TrainingSet) -> Result<Evaluation, SysIdError> {
    let start = model.first_predictable();
    cases.validate(start + 1)?;
    if (cases.dt - model.dt).abs() > 1e-9 * model.dt {
        return Err(SysIdError::InvalidConfig(format!(
            "cases sampled at {} s but the model expects {} s",
            cases.dt, model.dt
        )));
    }
    let mut out = Vec::with_capacity(cases.cases.len());
    for case in &cases.cases {
        let prediction = model.free_run_values(&case.input, &case.output)?;
        let report = ErrorReport::compute(&case.output[start..], &prediction[start..])
            .map_err(|e| SysIdError::InvalidConfig(e.to_string()))?;
        out.push(CaseEvaluation { id: case.id.clone(), report });
    }
    let worst = out.iter().map(|c| c.report.rmse).fold(0.0, f64::max);
    let mean = out.iter().map(|c| c.report.rmse).sum::<f64>() / out.len() as f64;
    Ok(Evaluation { cases: out, worst_rmse: worst, mean_rmse: mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manual_model(terms: Vec<Term>, coefficients: Vec<f64>) -> NarxModel {
        NarxModel {
            output_lags: 2,
            input_lags: 2,
            dt: 1.0,
            input_channels: vec![],
            terms,
            coefficients,
            normalization: Normalization::identity(),
            output_min: -10.0,
            output_max: 10.0,
            metadata: ModelMetadata {
                training_cases: vec![],
                fitted_at: String::new(),
                ridge_fallback: false,
                training_rmse_one_step: 0.0,
            },
        }
    }

    #[test]
    fn regressor_counting_example() {
        // n_a = n_b = 1, basis {1, y1, u0}, length 5 -> 4 rows x 3 features.
        let mut terms = vec![Term::constant(2)];
        terms.extend(monomials(2, 1));
        let norm = Normalization::identity();
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let u = [0.1, 0.2, 0.3, 0.4, 0.5];
        let cfg = FitConfig { output_lags: 1, input_lags: 1, dt: 1.0, ..Default::default() };
        let (phi, target) = build_regressors(&y, &u, &cfg, &terms, &norm).unwrap();
        assert_eq!(phi.nrows(), 4);
        assert_eq!(phi.ncols(), 3);
        assert_eq!(target.len(), 4);
        // Row 0 predicts k = 1: features (1, y0, u1).
        assert_eq!(phi[(0, 0)], 1.0);
        assert_eq!(phi[(0, 1)], 1.0);
        assert_eq!(phi[(0, 2)], 0.2);
        assert_eq!(target[0], 2.0);
    }

    #[test]
    fn constant_series_centered_gives_zero_features() {
        let mut terms = vec![Term::constant(2)];
        terms.extend(monomials(2, 1));
        let norm = Normalization {
            output_center: 7.0,
            output_scale: 1.0,
            input_center: 7.0,
            input_scale: 1.0,
        };
        let series = [7.0; 6];
        let cfg = FitConfig { output_lags: 1, input_lags: 1, dt: 1.0, ..Default::default() };
        let (phi, _) = build_regressors(&series, &series, &cfg, &terms, &norm).unwrap();
        for row in 0..phi.nrows() {
            assert_eq!(phi[(row, 1)], 0.0);
            assert_eq!(phi[(row, 2)], 0.0);
        }
    }

    #[test]
    fn persistence_model_holds_last_warmup_value() {
        // y(k) = y(k-1).
        let term = Term::parse("y1", 2, 2, 0).unwrap();
        let model = manual_model(vec![term], vec![1.0]);
        let input = vec![0.0; 10];
        let out = model.free_run_values(&input, &[1.0, 4.0]).unwrap();
        assert_eq!(out[1], 4.0);
        for v in &out[2..] {
            assert_eq!(*v, 4.0);
        }
    }

    #[test]
    fn feedthrough_model_reproduces_input() {
        // y(k) = u(k): output equals the input wherever predicted.
        let term = Term::parse("u0", 2, 2, 0).unwrap();
        let model = manual_model(vec![term], vec![1.0]);
        let input: Vec<f64> = (0..10).map(|k| (k as f64 * 0.7).sin()).collect();
        let out = model.free_run_values(&input, &[0.0, 0.0]).unwrap();
        for k in 2..10 {
            assert_eq!(out[k], input[k]);
        }
    }

    #[test]
    fn divergence_is_detected_with_step_index() {
        // y(k) = 3 y(k-1) blows up from the warmup seed.
        let term = Term::parse("y1", 2, 2, 0).unwrap();
        let model = manual_model(vec![term], vec![3.0]);
        let input = vec![0.0; 64];
        let err = model.free_run_values(&input, &[1.0, 1.0]).unwrap_err();
        match err {
            SysIdError::Divergence { step, .. } => assert!(step > 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn warmup_shorter_than_lags_rejected() {
        let term = Term::parse("y1", 2, 2, 0).unwrap();
        let model = manual_model(vec![term], vec![1.0]);
        assert!(matches!(
            model.free_run_values(&[0.0; 10], &[1.0]),
            Err(SysIdError::WarmupTooShort { .. })
        ));
    }

    #[test]
    fn evaluate_rejects_empty_case_list() {
        let term = Term::parse("y1", 2, 2, 0).unwrap();
        let model = manual_model(vec![term], vec![1.0]);
        let set = TrainingSet { dt: 1.0, cases: vec![] };
        assert!(matches!(evaluate(&model, &set), Err(SysIdError::EmptyTrainingSet)));
    }

    #[test]
    fn evaluate_zero_error_on_own_generating_system() {
        let term = Term::parse("u0", 2, 2, 0).unwrap();
        let model = manual_model(vec![term], vec![1.0]);
        let input: Vec<f64> = (0..40).map(|k| (k as f64 * 0.3).cos()).collect();
        let output = input.clone();
        let set = TrainingSet {
            dt: 1.0,
            cases: vec![TrainingCase { id: "self".into(), input, output }],
        };
        let eval = evaluate(&model, &set).unwrap();
        assert_eq!(eval.cases[0].report.rmse, 0.0);
        assert_eq!(eval.worst_rmse, 0.0);
    }
}
