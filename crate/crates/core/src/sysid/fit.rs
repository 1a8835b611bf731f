//! Ridge least squares and greedy forward term selection.
//!
//! The full candidate Gram matrix is precomputed per training case, so
//! scoring a candidate term only gathers a small submatrix, factors it and
//! free-runs the held-out case. Candidate scores are independent, which
//! keeps parallel and serial scoring bit-identical; ties break toward the
//! lowest term index.

use super::basis::{monomials, Term};
use super::{fill_lag_vector, FitConfig, ModelMetadata, NarxModel, Normalization, TrainingSet};
use crate::error::SysIdError;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Validation trace of the forward selection: entry 0 is the linear base
/// model, each further entry one accepted term.
#[derive(Debug, Clone)]
pub struct SelectionTrace {
    pub entries: Vec<TraceEntry>,
}

#[derive(Debug, Clone)]
pub struct TraceEntry {
    /// Canonical text of the accepted term; "linear base" for entry 0.
    pub term: String,
    /// Leave-one-case-out free-run RMSE after accepting it, original units.
    pub validation_rmse: f64,
}

struct CaseData {
    /// Gram matrix over the full term universe.
    gram: DMatrix<f64>,
    /// Right-hand side over the universe.
    rhs: DVector<f64>,
    /// Normalized channels for free-running.
    u_norm: Vec<f64>,
    y_norm: Vec<f64>,
    /// Filtered-input channels in normalized units.
    filters: Vec<Vec<f64>>,
}

struct Problem {
    universe: Vec<Term>,
    cases: Vec<CaseData>,
    gram_total: DMatrix<f64>,
    rhs_total: DVector<f64>,
    target_sq_total: f64,
    rows_total: usize,
    norm: Normalization,
    start: usize,
    bound_norm: f64,
}

/// Fits a NARX model: ridge least squares on the full linear term set,
/// then greedy forward selection over the nonlinear candidates scored by
/// leave-one-case-out free-run RMSE.
pub fn fit(training: &TrainingSet, config: &FitConfig) -> Result<NarxModel, SysIdError> {
    fit_with_trace(training, config).map(|(model, _)| model)
}

/// Linear baseline: identical contract with the degree capped at one and
/// no selection.
pub fn fit_linear(training: &TrainingSet, config: &FitConfig) -> Result<NarxModel, SysIdError> {
    let linear = FitConfig { max_degree: 1, ..config.clone() };
    fit(training, &linear)
}

/// [`fit`] also returning the selection trace.
pub fn fit_with_trace(
    training: &TrainingSet,
    config: &FitConfig,
) -> Result<(NarxModel, SelectionTrace), SysIdError> {
    config.validate()?;
    let start = config.first_predictable();
    training.validate(start + config.output_lags + 1)?;
    if (training.dt - config.dt).abs() > 1e-9 * config.dt {
        return Err(SysIdError::InvalidConfig(format!(
            "training sampled at {} s but the config expects {} s",
            training.dt, config.dt
        )));
    }

    let problem = Problem::build(training, config)?;
    let n_vars = config.output_lags + config.input_lags;
    let n_linear = 1 + n_vars;

    // Linear base: constant plus all degree-1 terms.
    let mut selected: Vec<usize> = (0..n_linear).collect();
    let mut ridge_fallback = false;
    let mut score = problem.loco_score(&selected, config, &mut ridge_fallback);
    let mut trace = SelectionTrace {
        entries: vec![TraceEntry { term: "linear base".into(), validation_rmse: score }],
    };

    let candidates: Vec<usize> =
        (n_linear..problem.universe.len()).filter(|&i| problem.universe[i].degree() >= 2).collect();

    let mut budget = config.selection_budget;
    while budget > 0 && !candidates.is_empty() {
        let remaining: Vec<usize> =
            candidates.iter().copied().filter(|c| !selected.contains(c)).collect();
        if remaining.is_empty() {
            break;
        }
        // Candidate scores are independent; a plain indexed map keeps the
        // parallel result identical to the serial one.
        let scores: Vec<f64> = remaining
            .par_iter()
            .map(|&cand| {
                let mut trial = selected.clone();
                trial.push(cand);
                let mut fallback = false;
                problem.loco_score(&trial, config, &mut fallback)
            })
            .collect();
        let (best_pos, best_score) = scores
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty candidate list");
        let improved = best_score < score
            && (score.is_infinite() || (score - best_score) / score >= config.min_improvement_rel);
        if !improved {
            break;
        }
        let cand = remaining[best_pos];
        selected.push(cand);
        score = best_score;
        trace.entries.push(TraceEntry {
            term: problem.universe[cand].display_split(config.output_lags, config.input_lags),
            validation_rmse: score,
        });
        budget -= 1;
    }

    // Final coefficients on the full training set.
    let (mut theta, fallback) =
        problem.ridge_solve_subset(&problem.gram_total, &problem.rhs_total, &selected, config)?;
    ridge_fallback |= fallback;

    // One-step least squares drifts in long free runs; polish the final
    // coefficients on the simulation error itself. Leave-one-case-out
    // early stopping bounds how far the polish may chase the training
    // trajectories.
    if config.sim_refine_iterations > 0 {
        theta = problem.refine_with_validation(theta, &selected, config);
    }

    let training_rmse = problem.one_step_rmse(&theta, &selected);

    let (y_min, y_max) = training
        .cases
        .iter()
        .flat_map(|c| c.output.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));

    let model = NarxModel {
        output_lags: config.output_lags,
        input_lags: config.input_lags,
        dt: config.dt,
        input_channels: config.input_channels.clone(),
        terms: selected.iter().map(|&i| problem.universe[i].clone()).collect(),
        coefficients: theta.iter().copied().collect(),
        normalization: problem.norm,
        output_min: y_min,
        output_max: y_max,
        metadata: ModelMetadata {
            training_cases: training.cases.iter().map(|c| c.id.clone()).collect(),
            fitted_at: String::new(),
            ridge_fallback,
            training_rmse_one_step: training_rmse,
        },
    };
    Ok((model, trace))
}

impl Problem {
    fn build(training: &TrainingSet, config: &FitConfig) -> Result<Problem, SysIdError> {
        let n_vars = config.output_lags + config.input_lags + config.input_channels.len();
        let mut universe = vec![Term::constant(n_vars)];
        universe.extend(monomials(n_vars, config.max_degree));
        let n_terms = universe.len();
        let start = config.first_predictable();

        let pooled_y: Vec<f64> =
            training.cases.iter().flat_map(|c| c.output.iter().copied()).collect();
        let pooled_u: Vec<f64> =
            training.cases.iter().flat_map(|c| c.input.iter().copied()).collect();
        let norm = Normalization::from_channels(&pooled_y, &pooled_u);

        let mut cases = Vec::with_capacity(training.cases.len());
        let mut gram_total = DMatrix::zeros(n_terms, n_terms);
        let mut rhs_total = DVector::zeros(n_terms);
        let mut target_sq_total = 0.0;
        let mut rows_total = 0;
        for case in &training.cases {
            let (phi, target) =
                super::build_regressors(&case.output, &case.input, config, &universe, &norm)?;
            let gram = phi.transpose() * &phi;
            let rhs = phi.transpose() * &target;
            let target_sq = target.dot(&target);
            gram_total += &gram;
            rhs_total += &rhs;
            target_sq_total += target_sq;
            rows_total += phi.nrows();
            let u_norm: Vec<f64> =
                case.input.iter().map(|&u| norm.normalize_input(u)).collect();
            let filters = super::filtered_channels(&u_norm, config.dt, &config.input_channels);
            cases.push(CaseData {
                gram,
                rhs,
                u_norm,
                y_norm: case.output.iter().map(|&y| norm.normalize_output(y)).collect(),
                filters,
            });
        }

        let (lo, hi) = pooled_y
            .iter()
            .map(|&y| norm.normalize_output(y))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let bound_norm = 10.0 * (hi - lo).max(hi.abs()).max(lo.abs()).max(1e-6);

        Ok(Problem {
            universe,
            cases,
            gram_total,
            rhs_total,
            target_sq_total,
            rows_total,
            norm,
            start,
            bound_norm,
        })
    }

    /// Leave-one-case-out validation: refit on the remaining cases, free
    /// run the held-out one, average the RMSE in original units. A single
    /// training case validates against its own free run.
    fn loco_score(&self, selected: &[usize], config: &FitConfig, fallback: &mut bool) -> f64 {
        let single = self.cases.len() == 1;
        let mut acc = 0.0;
        for (hold, case) in self.cases.iter().enumerate() {
            let (gram, rhs) = if single {
                (self.gram_total.clone(), self.rhs_total.clone())
            } else {
                (&self.gram_total - &case.gram, &self.rhs_total - &case.rhs)
            };
            let theta = match self.ridge_solve_subset(&gram, &rhs, selected, config) {
                Ok((theta, fb)) => {
                    *fallback |= fb;
                    theta
                }
                Err(_) => return f64::INFINITY,
            };
            match self.free_run_norm(&theta, selected, hold, config) {
                Some(rmse_norm) => acc += rmse_norm * self.norm.output_scale,
                None => return f64::INFINITY,
            }
        }
        acc / self.cases.len() as f64
    }

    /// Normalized-space free run of case `hold`; returns the RMSE over the
    /// predicted span or `None` on divergence.
    fn free_run_norm(
        &self,
        theta: &DVector<f64>,
        selected: &[usize],
        hold: usize,
        config: &FitConfig,
    ) -> Option<f64> {
        let case = &self.cases[hold];
        let n = case.y_norm.len();
        let start = self.start;
        let mut y_sim: Vec<f64> = case.y_norm[..start].to_vec();
        let mut lags =
            vec![0.0; config.output_lags + config.input_lags + config.input_channels.len()];
        let mut sum_sq = 0.0;
        for k in start..n {
            fill_lag_vector(
                &mut lags,
                &y_sim,
                &case.u_norm,
                &case.filters,
                k,
                config.output_lags,
                config.input_lags,
            );
            let mut acc = 0.0;
            for (j, &idx) in selected.iter().enumerate() {
                acc += theta[j] * self.universe[idx].eval(&lags);
            }
            if !acc.is_finite() || acc.abs() > self.bound_norm {
                return None;
            }
            let err = acc - case.y_norm[k];
            sum_sq += err * err;
            y_sim.push(acc);
        }
        Some((sum_sq / (n - start) as f64).sqrt())
    }

    /// Ridge solve on a subset of universe terms. On a failed factorization
    /// the ridge is raised decade by decade; the flag reports that fallback.
    fn ridge_solve_subset(
        &self,
        gram: &DMatrix<f64>,
        rhs: &DVector<f64>,
        selected: &[usize],
        config: &FitConfig,
    ) -> Result<(DVector<f64>, bool), SysIdError> {
        let m = selected.len();
        let mut g = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        for (i, &si) in selected.iter().enumerate() {
            b[i] = rhs[si];
            for (j, &sj) in selected.iter().enumerate() {
                g[(i, j)] = gram[(si, sj)];
            }
        }
        if let Some(theta) = ridge_cholesky(&g, &b, config.ridge) {
            return Ok((theta, false));
        }
        let mut mu = config.ridge.max(1e-10);
        for _ in 0..10 {
            mu *= 100.0;
            if let Some(theta) = ridge_cholesky(&g, &b, mu) {
                return Ok((theta, true));
            }
        }
        Err(SysIdError::Singular)
    }

    /// Simulation-error polish with leave-one-case-out early stopping:
    /// every fold refines on the other cases while recording the held-out
    /// free-run error per iteration; the final refinement on all cases
    /// stops at the fold-averaged best iteration. A single training case
    /// skips the validation and runs a short fixed polish.
    fn refine_with_validation(
        &self,
        seed: DVector<f64>,
        selected: &[usize],
        config: &FitConfig,
    ) -> DVector<f64> {
        let n_cases = self.cases.len();
        if n_cases == 1 {
            return self
                .refine_simulation_error(seed, selected, config, &[0], config.sim_refine_iterations)
                .0;
        }
        let folds: Vec<Vec<f64>> = (0..n_cases)
            .into_par_iter()
            .map(|hold| {
                let fit_cases: Vec<usize> = (0..n_cases).filter(|&c| c != hold).collect();
                let mut history =
                    vec![self.validation_rmse(&seed, selected, hold, config).unwrap_or(f64::INFINITY)];
                let mut theta = seed.clone();
                let mut lambda = 1e-4;
                for _ in 0..config.sim_refine_iterations {
                    match self.lm_step(&theta, selected, config, &fit_cases, &mut lambda) {
                        Some(next) => {
                            theta = next;
                            history.push(
                                self.validation_rmse(&theta, selected, hold, config)
                                    .unwrap_or(f64::INFINITY),
                            );
                        }
                        None => break,
                    }
                }
                history
            })
            .collect();
        // Mean validation error per iteration, over the folds that got
        // that far; choose the minimizing iteration count.
        let longest = folds.iter().map(Vec::len).max().unwrap_or(1);
        let mut best_iter = 0;
        let mut best_score = f64::INFINITY;
        for k in 0..longest {
            let vals: Vec<f64> =
                folds.iter().map(|h| *h.get(k).unwrap_or(h.last().expect("nonempty"))).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            if mean < best_score {
                best_score = mean;
                best_iter = k;
            }
        }
        if best_iter == 0 {
            return seed;
        }
        let all: Vec<usize> = (0..n_cases).collect();
        self.refine_simulation_error(seed, selected, config, &all, best_iter).0
    }

    /// Held-out free-run RMSE in original units.
    fn validation_rmse(
        &self,
        theta: &DVector<f64>,
        selected: &[usize],
        hold: usize,
        config: &FitConfig,
    ) -> Option<f64> {
        self.free_run_norm(theta, selected, hold, config)
            .map(|rmse| rmse * self.norm.output_scale)
    }

    /// Levenberg-Marquardt minimization of the summed squared free-run
    /// error over `fit_cases`, seeded by the least-squares coefficients.
    /// Returns the refined coefficients and accepted iteration count.
    fn refine_simulation_error(
        &self,
        seed: DVector<f64>,
        selected: &[usize],
        config: &FitConfig,
        fit_cases: &[usize],
        max_iterations: usize,
    ) -> (DVector<f64>, usize) {
        let mut theta = seed;
        let mut lambda = 1e-4;
        let mut accepted = 0;
        for _ in 0..max_iterations {
            match self.lm_step(&theta, selected, config, fit_cases, &mut lambda) {
                Some(next) => {
                    theta = next;
                    accepted += 1;
                }
                None => break,
            }
        }
        (theta, accepted)
    }

    /// One accepted Levenberg-Marquardt step on the simulation error of
    /// `fit_cases`, or `None` when no damping produces an improvement.
    fn lm_step(
        &self,
        theta: &DVector<f64>,
        selected: &[usize],
        config: &FitConfig,
        fit_cases: &[usize],
        lambda: &mut f64,
    ) -> Option<DVector<f64>> {
        let m = selected.len();
        let base_sse = self.simulation_sse(theta, selected, config, fit_cases)?;
        let (jtj, jtr) = self.simulation_normal_equations(theta, selected, config, fit_cases)?;
        for _ in 0..10 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += *lambda * (1.0 + jtj[(i, i)]) + config.ridge;
            }
            let mut grad = jtr.clone();
            for i in 0..m {
                grad[i] += config.ridge * theta[i];
            }
            let Some(chol) = a.cholesky() else {
                *lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&grad);
            let candidate = theta - &delta;
            match self.simulation_sse(&candidate, selected, config, fit_cases) {
                Some(sse) if sse < base_sse * (1.0 - 1e-9) => {
                    *lambda = (*lambda / 3.0).max(1e-12);
                    return Some(candidate);
                }
                _ => *lambda *= 10.0,
            }
        }
        None
    }

    /// Free-run squared error plus ridge penalty; `None` on divergence.
    fn simulation_sse(
        &self,
        theta: &DVector<f64>,
        selected: &[usize],
        config: &FitConfig,
        fit_cases: &[usize],
    ) -> Option<f64> {
        let mut sse = 0.0;
        for &hold in fit_cases {
            let rmse_norm = self.free_run_norm(theta, selected, hold, config)?;
            let n = self.cases[hold].y_norm.len() - self.start;
            sse += rmse_norm * rmse_norm * n as f64;
        }
        Some(sse + config.ridge * theta.dot(theta))
    }

    /// Gauss-Newton normal equations of the simulation error: runs each
    /// case open loop while propagating coefficient sensitivities through
    /// the fed-back output lags.
    fn simulation_normal_equations(
        &self,
        theta: &DVector<f64>,
        selected: &[usize],
        config: &FitConfig,
        fit_cases: &[usize],
    ) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let m = selected.len();
        let n_a = config.output_lags;
        let mut jtj = DMatrix::zeros(m, m);
        let mut jtr = DVector::zeros(m);
        let mut lags = vec![0.0; n_a + config.input_lags + config.input_channels.len()];
        for &case_index in fit_cases {
            let case = &self.cases[case_index];
            let n = case.y_norm.len();
            let start = self.start;
            let mut y_sim: Vec<f64> = case.y_norm[..start].to_vec();
            // Sensitivity rows of the last n_a simulated outputs.
            let mut sens: Vec<DVector<f64>> = vec![DVector::zeros(m); n];
            for k in start..n {
                fill_lag_vector(
                    &mut lags,
                    &y_sim,
                    &case.u_norm,
                    &case.filters,
                    k,
                    n_a,
                    config.input_lags,
                );
                let mut phi = DVector::zeros(m);
                let mut value = 0.0;
                for (j, &idx) in selected.iter().enumerate() {
                    let term = &self.universe[idx];
                    phi[j] = term.eval(&lags);
                    value += theta[j] * phi[j];
                }
                if !value.is_finite() || value.abs() > self.bound_norm {
                    return None;
                }
                // d y(k)/d theta = phi + sum_i (d yhat / d y(k-i)) d y(k-i)/d theta
                let mut row = phi;
                for i in 1..=n_a {
                    if k < start + i {
                        // Warmup samples carry no coefficient dependence.
                        continue;
                    }
                    let mut dy = 0.0;
                    for (j, &idx) in selected.iter().enumerate() {
                        let g = self.universe[idx].grad(i - 1, &lags);
                        if g != 0.0 {
                            dy += theta[j] * g;
                        }
                    }
                    if dy != 0.0 {
                        row.axpy(dy, &sens[k - i], 1.0);
                    }
                }
                let residual = value - case.y_norm[k];
                jtr.axpy(residual, &row, 1.0);
                jtj.ger(1.0, &row, &row, 1.0);
                sens[k] = row;
                y_sim.push(value);
            }
        }
        Some((jtj, jtr))
    }

    /// One-step-ahead training residual RMSE in original units, from the
    /// precomputed Gram pieces.
    fn one_step_rmse(&self, theta: &DVector<f64>, selected: &[usize]) -> f64 {
        let m = selected.len();
        let mut g = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        for (i, &si) in selected.iter().enumerate() {
            b[i] = self.rhs_total[si];
            for (j, &sj) in selected.iter().enumerate() {
                g[(i, j)] = self.gram_total[(si, sj)];
            }
        }
        let sq = theta.dot(&(&g * theta)) - 2.0 * theta.dot(&b) + self.target_sq_total;
        (sq.max(0.0) / self.rows_total as f64).sqrt() * self.norm.output_scale
    }
}

fn ridge_cholesky(g: &DMatrix<f64>, b: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let mut a = g.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += mu;
    }
    let theta = a.cholesky()?.solve(b);
    if theta.iter().all(|v| v.is_finite()) {
        Some(theta)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysid::evaluate;
    use crate::sysid::TrainingCase;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_input(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = Vec::with_capacity(len);
        let mut level: f64 = rng.gen_range(-1.0..1.0);
        for k in 0..len {
            if k % 17 == 0 {
                level = rng.gen_range(-1.0..1.0);
            }
            u.push(level);
        }
        u
    }

    fn simulate_linear(u: &[f64]) -> Vec<f64> {
        // y(k) = 0.9 y(k-1) + 0.1 u(k-1), y(0) = 0.
        let mut y = vec![0.0; u.len()];
        for k in 1..u.len() {
            y[k] = 0.9 * y[k - 1] + 0.1 * u[k - 1];
        }
        y
    }

    fn simulate_quadratic(u: &[f64]) -> Vec<f64> {
        // y(k) = 0.8 y(k-1) + 0.05 u(k-1)^2.
        let mut y = vec![0.0; u.len()];
        for k in 1..u.len() {
            y[k] = 0.8 * y[k - 1] + 0.05 * u[k - 1] * u[k - 1];
        }
        y
    }

    fn linear_training(seeds: &[u64]) -> TrainingSet {
        let cases = seeds
            .iter()
            .map(|&s| {
                let u = random_input(400, s);
                let y = simulate_linear(&u);
                TrainingCase { id: format!("case{s}"), input: u, output: y }
            })
            .collect();
        TrainingSet { dt: 1.0, cases }
    }

    fn small_config() -> FitConfig {
        FitConfig {
            output_lags: 2,
            input_lags: 2,
            dt: 1.0,
            max_degree: 2,
            ridge: 1e-10,
            selection_budget: 8,
            min_improvement_rel: 0.01,
            sim_refine_iterations: 20,
            input_channels: vec![],
        }
    }

    #[test]
    fn linear_system_recovered_to_1e6() {
        let training = linear_training(&[1, 2, 3]);
        let model = fit_linear(&training, &small_config()).unwrap();
        let coeffs = model.linear_coefficients().expect("linear model");
        assert!((coeffs.output[0] - 0.9).abs() < 1e-6, "a1 = {}", coeffs.output[0]);
        assert!(coeffs.output[1].abs() < 1e-6, "a2 = {}", coeffs.output[1]);
        assert!(coeffs.input[0].abs() < 1e-6, "b0 = {}", coeffs.input[0]);
        assert!((coeffs.input[1] - 0.1).abs() < 1e-6, "b1 = {}", coeffs.input[1]);
        assert!(coeffs.intercept.abs() < 1e-6, "c = {}", coeffs.intercept);

        // Free run reproduces the system.
        let u = random_input(300, 99);
        let y = simulate_linear(&u);
        let pred = model.free_run_values(&u, &y[..2]).unwrap();
        let rmse = crate::metrics::rmse(&y[2..], &pred[2..]).unwrap();
        assert!(rmse < 1e-6, "free-run RMSE {rmse}");
    }

    #[test]
    fn quadratic_system_needs_the_nonlinear_term() {
        let seeds = [11u64, 12, 13];
        let cases: Vec<TrainingCase> = seeds
            .iter()
            .map(|&s| {
                let u = random_input(400, s);
                let y = simulate_quadratic(&u);
                TrainingCase { id: format!("q{s}"), input: u, output: y }
            })
            .collect();
        let training = TrainingSet { dt: 1.0, cases };
        let cfg = small_config();

        let nonlinear = fit(&training, &cfg).unwrap();
        let linear = fit_linear(&training, &cfg).unwrap();

        let u = random_input(300, 77);
        let y = simulate_quadratic(&u);
        let pred_nl = nonlinear.free_run_values(&u, &y[..2]).unwrap();
        let rmse_nl = crate::metrics::rmse(&y[2..], &pred_nl[2..]).unwrap();
        let rmse_lin = match linear.free_run_values(&u, &y[..2]) {
            Ok(pred_lin) => crate::metrics::rmse(&y[2..], &pred_lin[2..]).unwrap(),
            Err(_) => f64::INFINITY,
        };
        assert!(rmse_nl < 1e-4, "nonlinear free-run RMSE {rmse_nl}");
        assert!(rmse_lin > 10.0 * rmse_nl, "linear {rmse_lin} vs nonlinear {rmse_nl}");
    }

    #[test]
    fn fit_equals_fit_linear_at_degree_one() {
        let training = linear_training(&[4, 5]);
        let cfg = FitConfig { max_degree: 1, ..small_config() };
        let a = fit(&training, &cfg).unwrap();
        let b = fit_linear(&training, &small_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_is_deterministic() {
        let training = linear_training(&[6, 7, 8]);
        let cfg = small_config();
        let a = fit(&training, &cfg).unwrap();
        let b = fit(&training, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn selection_trace_is_non_increasing() {
        let seeds = [21u64, 22, 23];
        let cases: Vec<TrainingCase> = seeds
            .iter()
            .map(|&s| {
                let u = random_input(400, s);
                let y = simulate_quadratic(&u);
                TrainingCase { id: format!("q{s}"), input: u, output: y }
            })
            .collect();
        let training = TrainingSet { dt: 1.0, cases };
        let (_, trace) = fit_with_trace(&training, &small_config()).unwrap();
        for pair in trace.entries.windows(2) {
            assert!(pair[1].validation_rmse <= pair[0].validation_rmse);
        }
    }

    #[test]
    fn linear_features_nest_in_higher_degree_universe() {
        let linear = {
            let mut u = vec![Term::constant(4)];
            u.extend(monomials(4, 1));
            u
        };
        let cubic = {
            let mut u = vec![Term::constant(4)];
            u.extend(monomials(4, 3));
            u
        };
        for t in &linear {
            assert!(cubic.contains(t));
        }
    }

    #[test]
    fn ridge_shrinks_coefficient_norm_monotonically() {
        let training = linear_training(&[31]);
        let mut prev_norm = f64::INFINITY;
        for mu in [0.0, 1e-6, 1e-3, 1e-1, 10.0] {
            let cfg = FitConfig { ridge: mu, selection_budget: 0, ..small_config() };
            let model = fit(&training, &cfg).unwrap();
            let norm: f64 = model.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!(norm <= prev_norm + 1e-12, "norm {norm} grew at mu = {mu}");
            prev_norm = norm;
        }
    }

    #[test]
    fn normalization_invariance_of_predictions() {
        let training = linear_training(&[41, 42]);
        let cfg = small_config();
        let model = fit(&training, &cfg).unwrap();

        // Affinely rescale both channels and refit.
        let (a_u, b_u) = (3.0, -7.0);
        let (a_y, b_y) = (0.25, 11.0);
        let scaled = TrainingSet {
            dt: training.dt,
            cases: training
                .cases
                .iter()
                .map(|c| TrainingCase {
                    id: c.id.clone(),
                    input: c.input.iter().map(|u| a_u * u + b_u).collect(),
                    output: c.output.iter().map(|y| a_y * y + b_y).collect(),
                })
                .collect(),
        };
        let model_scaled = fit(&scaled, &cfg).unwrap();

        let u = random_input(300, 55);
        let y = simulate_linear(&u);
        let pred = model.free_run_values(&u, &y[..2]).unwrap();

        let u_s: Vec<f64> = u.iter().map(|v| a_u * v + b_u).collect();
        let y_s: Vec<f64> = y.iter().map(|v| a_y * v + b_y).collect();
        let pred_s = model_scaled.free_run_values(&u_s, &y_s[..2]).unwrap();

        for k in 2..pred.len() {
            let back = (pred_s[k] - b_y) / a_y;
            let denom = pred[k].abs().max(1.0);
            assert!(
                (back - pred[k]).abs() / denom < 1e-9,
                "k={k}: {back} vs {}",
                pred[k]
            );
        }
    }

    #[test]
    fn evaluation_is_stable_across_runs() {
        let training = linear_training(&[61, 62, 63]);
        let model = fit(&training, &small_config()).unwrap();
        let eval_cases = linear_training(&[71, 72, 73, 74, 75]);
        let a = evaluate(&model, &eval_cases).unwrap();
        let b = evaluate(&model, &eval_cases).unwrap();
        let order_a: Vec<&String> = a.cases.iter().map(|c| &c.id).collect();
        let order_b: Vec<&String> = b.cases.iter().map(|c| &c.id).collect();
        assert_eq!(order_a, order_b);
        for (x, y) in a.cases.iter().zip(&b.cases) {
            assert_eq!(x.report.rmse, y.report.rmse);
        }
    }
}
