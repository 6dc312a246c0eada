//! Levenberg-Marquardt least squares and the fit models for ODMR, Ramsey, T1
//! and Rabi data.
//!
//! Jacobians are central differences with a relative step of 1e-6, refined
//! by one Richardson level. Damping starts at 1e-3, grows tenfold on a
//! rejected step and shrinks tenfold on an accepted one. The iteration stops
//! when an accepted step changes the residual by less than 1e-10 relative,
//! or after 200 iterations. Bounds are enforced by projecting every trial
//! point into the box; a step that would cross a bound goes at most 90 % of
//! the way to it, so parameters such as time constants cannot collapse onto
//! a degenerate bound in one step.

mod guess;
mod models;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use guess::initial_guess;
pub use models::{
    model_damped_sin, model_exp_decay, model_lorentzian_multi, model_ramsey_3cos, wrap_phase, Bounds, FitModel,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("x has {x} points but y has {y}")]
    DimensionMismatch { x: usize, y: usize },
    #[error("{points} data points cannot determine {params} parameters")]
    TooFewPoints { points: usize, params: usize },
    #[error("initial vector has {got} entries, model needs {expected}")]
    WrongParameterCount { got: usize, expected: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("found {found} features, model needs {needed}")]
    UnderDetermined { found: usize, needed: usize },
    #[error("invalid data: {0}")]
    InvalidData(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// Squared residuals weighted by `1/max(y, 1)`, for count data.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Box constraints; the model's default box when absent.
    pub bounds: Option<Bounds>,
    pub weighting: Weighting,
    pub max_iterations: usize,
    /// Relative residual change that ends the iteration.
    pub tolerance: f64,
    /// Relative finite-difference step (central, with one Richardson level).
    pub jacobian_step: f64,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds: None,
            weighting: Weighting::Uniform,
            max_iterations: 200,
            tolerance: 1e-10,
            jacobian_step: 1e-6,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub parameters: Vec<f64>,
    /// Square roots of the covariance diagonal.
    pub uncertainties: Vec<f64>,
    /// `s² (JᵀJ)⁻¹` at the optimum with `s²` the residual variance.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted Euclidean residual norm at the optimum.
    pub residual_norm: f64,
    pub initial_residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(x, &self.parameters)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        let i = self.model.param_names().iter().position(|n| n == name)?;
        Some(self.parameters[i])
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            schema_version: REPORT_SCHEMA_VERSION,
            model: self.model.to_string(),
            parameters: self
                .model
                .param_names()
                .into_iter()
                .zip(self.parameters.iter().zip(&self.uncertainties))
                .map(|(name, (value, uncertainty))| ParamReport { name, value: *value, uncertainty: *uncertainty })
                .collect(),
            residual_norm: self.residual_norm,
            converged: self.converged,
            iterations: self.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub name: String,
    pub value: f64,
    pub uncertainty: f64,
}

/// JSON-exportable fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub model: String,
    pub parameters: Vec<ParamReport>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn step_for(p: f64, rel: f64) -> f64 {
    if p == 0.0 {
        rel
    } else {
        rel * p.abs()
    }
}

/// Finite-difference Jacobian `∂f(xᵢ)/∂pⱼ`, rows per data point. Near a
/// bound the difference is taken one-sided, away from it.
pub fn numeric_jacobian(model: &FitModel, x: &[f64], p: &[f64], step: f64, bounds: Option<&Bounds>) -> DMatrix<f64> {
    let m = p.len();
    let mut j = DMatrix::zeros(x.len(), m);
    let mut hi = p.to_vec();
    let mut lo = p.to_vec();
    for c in 0..m {
        let h = step_for(p[c], step);
        let (mut up, mut dn) = (h, h);
        if let Some(b) = bounds {
            if p[c] + h > b.upper[c] {
                up = 0.0;
            } else if p[c] - h < b.lower[c] {
                dn = 0.0;
            }
        }
        // One Richardson level: pairs at h and h/2. Central differences lose
        // their h² term, one-sided ones their h term.
        let gain = if up > 0.0 && dn > 0.0 { 4.0 } else { 2.0 };
        for (r, &xi) in x.iter().enumerate() {
            let mut d = [0.0; 2];
            for (k, s) in [1.0, 0.5].into_iter().enumerate() {
                hi[c] = p[c] + s * up;
                lo[c] = p[c] - s * dn;
                d[k] = (model.eval(xi, &hi) - model.eval(xi, &lo)) / (hi[c] - lo[c]);
            }
            j[(r, c)] = (gain * d[1] - d[0]) / (gain - 1.0);
        }
        hi[c] = p[c];
        lo[c] = p[c];
    }
    j
}

struct Problem<'a> {
    model: FitModel,
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> Option<DVector<f64>> {
        let r: Vec<f64> = (0..self.x.len()).map(|i| self.w[i] * (self.y[i] - self.model.eval(self.x[i], p))).collect();
        r.iter().all(|v| v.is_finite()).then(|| DVector::from_vec(r))
    }

    fn weighted_jacobian(&self, p: &[f64], step: f64, bounds: &Bounds) -> DMatrix<f64> {
        let mut j = numeric_jacobian(&self.model, self.x, p, step, Some(bounds));
        for (r, w) in self.w.iter().enumerate() {
            j.row_mut(r).scale_mut(*w);
        }
        j
    }
}

fn check_inputs(model: &FitModel, x: &[f64], y: &[f64], init: &[f64]) -> Result<(), FitError> {
    model.validate()?;
    if x.len() != y.len() {
        return Err(FitError::DimensionMismatch { x: x.len(), y: y.len() });
    }
    let m = model.n_params();
    if init.len() != m {
        return Err(FitError::WrongParameterCount { got: init.len(), expected: m });
    }
    if x.len() < m {
        return Err(FitError::TooFewPoints { points: x.len(), params: m });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(FitError::NonFinite("x"));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(FitError::NonFinite("y"));
    }
    if !init.iter().all(|v| v.is_finite()) {
        return Err(FitError::NonFinite("initial parameters"));
    }
    Ok(())
}

/// `(JᵀJ)⁻¹` after unit-diagonal scaling, by SVD pseudo-inverse so that
/// unidentifiable directions do not blow up.
fn covariance_matrix(jtj: &DMatrix<f64>) -> DMatrix<f64> {
    let m = jtj.nrows();
    let d: Vec<f64> = (0..m).map(|k| if jtj[(k, k)] > 0.0 { 1.0 / jtj[(k, k)].sqrt() } else { 0.0 }).collect();
    let scaled = DMatrix::from_fn(m, m, |a, b| jtj[(a, b)] * d[a] * d[b]);
    match scaled.pseudo_inverse(1e-13) {
        Ok(inv) => DMatrix::from_fn(m, m, |a, b| inv[(a, b)] * d[a] * d[b]),
        Err(_) => DMatrix::from_element(m, m, f64::NAN),
    }
}

/// Levenberg-Marquardt fit of `model` to `(x, y)` from `init`.
pub fn fit(model: FitModel, x: &[f64], y: &[f64], init: &[f64], options: &FitOptions) -> Result<FitResult, FitError> {
    check_inputs(&model, x, y, init)?;
    let m = model.n_params();
    let bounds = options.bounds.clone().unwrap_or_else(|| model.default_bounds());
    bounds.validate(m)?;
    let w = match options.weighting {
        Weighting::Uniform => vec![1.0; x.len()],
        Weighting::Poisson => y.iter().map(|v| 1.0 / v.max(1.0).sqrt()).collect(),
    };
    let prob = Problem { model, x, y, w };

    let mut p = init.to_vec();
    bounds.project(&mut p);
    let mut r = prob.residuals(&p).ok_or(FitError::NonFinite("model at the initial parameters"))?;
    let mut cost = r.norm_squared();
    let initial_cost = cost;
    let mut lambda = options.initial_damping;
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let j = prob.weighted_jacobian(&p, options.jacobian_step, &bounds);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let dmax = jtj.diagonal().max();
        let mut accepted = false;
        while lambda <= 1e16 {
            let mut a = jtj.clone();
            for k in 0..m {
                let d = jtj[(k, k)].max(1e-12 * dmax).max(f64::MIN_POSITIVE);
                a[(k, k)] += lambda * d;
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = bounds.step(&p, delta.as_slice());
            match prob.residuals(&trial) {
                Some(rt) if rt.norm_squared() < cost => {
                    let new_cost = rt.norm_squared();
                    let rel = (cost - new_cost) / cost;
                    p = trial;
                    r = rt;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    if rel < options.tolerance || cost == 0.0 {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            // No descent direction left at any damping: a stationary point.
            converged = true;
        }
    }

    let j = prob.weighted_jacobian(&p, options.jacobian_step, &bounds);
    let n = x.len();
    let s2 = if n > m { cost / (n - m) as f64 } else { cost };
    let cov = covariance_matrix(&(j.transpose() * &j)) * s2;

    let (perm, sign, offset) = model.canonical_map(&p);
    let params: Vec<f64> = (0..m).map(|i| sign[i] * p[perm[i]] + offset[i]).collect();
    let covariance: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let c = 0.5 * (cov[(perm[i], perm[k])] + cov[(perm[k], perm[i])]);
                    sign[i] * sign[k] * c
                })
                .collect()
        })
        .collect();
    let uncertainties = (0..m).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
    Ok(FitResult {
        model,
        parameters: params,
        uncertainties,
        covariance,
        residual_norm: cost.sqrt(),
        initial_residual_norm: initial_cost.sqrt(),
        converged,
        iterations,
    })
}

/// Fit from every start in parallel and keep the lowest residual; ties go
/// to the earliest start.
pub fn fit_multistart(
    model: FitModel,
    x: &[f64],
    y: &[f64],
    starts: &[Vec<f64>],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    if starts.is_empty() {
        return Err(FitError::InvalidData("no starting points".into()));
    }
    let results: Vec<Result<FitResult, FitError>> = starts.par_iter().map(|s| fit(model, x, y, s, options)).collect();
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.residual_norm < b.residual_norm) {
                    best = Some(f);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one start"))
}

/// Fit from [`initial_guess`] plus a few perturbed starts.
pub fn fit_auto(model: FitModel, x: &[f64], y: &[f64], options: &FitOptions) -> Result<FitResult, FitError> {
    check_inputs(&model, x, y, &vec![0.0; model.n_params()])?;
    let g = initial_guess(model, x, y)?;
    let mut starts = vec![g.clone()];
    let scale = |i: usize, f: f64| {
        let mut s = g.clone();
        s[i] *= f;
        s
    };
    match model {
        FitModel::Ramsey3Cos => starts.extend([scale(2, 0.5), scale(2, 2.0)]),
        FitModel::ExpDecay => starts.extend([scale(1, 0.5), scale(1, 2.0)]),
        FitModel::DampedSin => starts.extend([scale(3, 0.3), scale(3, 3.0)]),
        FitModel::LorentzianMulti(n) => {
            let mut narrow = g.clone();
            let mut wide = g.clone();
            for k in 0..n {
                narrow[2 + 3 * k] *= 0.5;
                wide[2 + 3 * k] *= 2.0;
            }
            starts.extend([narrow, wide]);
        }
    }
    fit_multistart(model, x, y, &starts, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(0.0, 5e-3, 40);
        let y: Vec<f64> = t.iter().map(|t| (-t / 1e-3).exp()).collect();
        let r = fit(FitModel::ExpDecay, &t, &y, &[0.7, 2e-3, 0.1], &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.parameters[1] / 1e-3 - 1.0).abs() < 1e-8, "{:?}", r.parameters);
        assert!(r.residual_norm <= r.initial_residual_norm);
    }

    #[test]
    fn noisy_lorentzian_center() {
        let f = grid(2.865e9, 2.875e9, 201);
        let mut hits = 0;
        for trial in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let noise = Normal::new(0.0, 0.01).unwrap();
            let truth = [1.0, 2.870e9, 1e6, 0.2];
            let y: Vec<f64> = f.iter().map(|x| model_lorentzian_multi(*x, &truth) + noise.sample(&mut rng)).collect();
            let r = fit_auto(FitModel::LorentzianMulti(1), &f, &y, &FitOptions::default()).unwrap();
            if (r.parameters[1] - 2.870e9).abs() < 50e3 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn ramsey_triplet() {
        let t = grid(0.0, 10e-6, 400);
        let f0 = 3e6;
        let truth = [0.5, 0.1, 1.5e-6, f0 - 2.16e6, f0, f0 + 2.16e6, 0.2, -0.4, 1.0];
        let y: Vec<f64> = t.iter().map(|x| model_ramsey_3cos(*x, &truth)).collect();
        let r = fit_auto(FitModel::Ramsey3Cos, &t, &y, &FitOptions::default()).unwrap();
        for k in 0..3 {
            assert!((r.parameters[3 + k] - truth[3 + k]).abs() < 50e3, "{:?}", r.parameters);
        }
    }

    #[test]
    fn covariance_scales_with_noise() {
        let t = grid(0.0, 5e-3, 60);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let y: Vec<f64> = t.iter().map(|t| 2.0 * (-t / 1e-3).exp() + 0.5 + noise.sample(&mut rng)).collect();
        let r = fit(FitModel::ExpDecay, &t, &y, &[1.0, 2e-3, 0.0], &FitOptions::default()).unwrap();
        let c = &r.covariance;
        for i in 0..3 {
            assert!(c[i][i] >= 0.0);
            for k in 0..3 {
                assert_eq!(c[i][k], c[k][i]);
            }
        }
        assert!(r.uncertainties[1] > 0.0 && r.uncertainties[1] < 0.1e-3, "{r:?}");
        assert!((r.parameters[1] - 1e-3).abs() < 4.0 * r.uncertainties[1]);
    }

    #[test]
    fn input_errors() {
        let o = FitOptions::default();
        assert!(matches!(
            fit(FitModel::ExpDecay, &[1.0, 2.0], &[1.0], &[1.0, 1.0, 0.0], &o),
            Err(FitError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            fit(FitModel::ExpDecay, &[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0, 0.0], &o),
            Err(FitError::TooFewPoints { .. })
        ));
        assert!(matches!(
            fit(FitModel::ExpDecay, &[1.0, 2.0, 3.0], &[1.0, f64::NAN, 0.0], &[1.0, 1.0, 0.0], &o),
            Err(FitError::NonFinite(_))
        ));
    }

    #[test]
    fn deterministic() {
        let t = grid(0.0, 2e-6, 100);
        let y: Vec<f64> =
            t.iter().map(|x| model_damped_sin(*x, &[0.3, 2e6, 0.4, 1e-6, 1.0]) + 0.01 * (x * 1e7).sin()).collect();
        let a = fit_auto(FitModel::DampedSin, &t, &y, &FitOptions::default()).unwrap();
        let b = fit_auto(FitModel::DampedSin, &t, &y, &FitOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!((a.parameters[1] - 2e6).abs() < 2e4);
    }
}
