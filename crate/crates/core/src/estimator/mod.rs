//! Regularized kernel estimators.
//!
//! All solvers minimize the finite-dimensional criterion
//!
//! ```text
//! sum_i l(y_i, b + (K alpha)_i) + lambda * alphaᵀ K alpha
//! ```
//!
//! over the unpenalized intercept `b` and the expansion coefficients
//! `alpha`, so that the fitted function is `f(x) = b + sum_i alpha_i K(x, x_i)`.
//! The same optimum is also reachable in the eigen coordinates
//! `K alpha = U beta` (penalty `lambda betaᵀ D⁻¹ beta`) and in the feature
//! coordinates `theta = D^{-1/2} beta` (penalty `lambda thetaᵀ theta`); see
//! [`reparam`].
//!
//! Solvers by loss:
//!
//! * squared: one dense linear solve;
//! * deviance and exponential: damped Newton on `(b, alpha)`;
//! * hinge: SMO on the box-constrained dual with `C = 1 / (2 lambda)`,
//!   see [`smo`].

mod ipm;
mod newton;
pub mod path;
pub mod reparam;
pub mod smo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, cross_gram, KernelMatrix, KernelSpec};
use crate::linalg::{dot, Matrix};
use crate::loss::{check_label, Loss};

pub use path::{lambda_path, log_grid, PathMode, PathRecord, PathResult, PathSpec};
pub use reparam::{
    fit_reparam, fit_reparam_with, objective_reparam, objective_reparam_with_threshold,
    Parametrization, ReparamCoefficients,
};
pub use smo::kkt_residual;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// What to fit: loss, kernel and regularization strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSpec {
    pub loss: Loss,
    pub kernel: KernelSpec,
    pub lambda: f64,
    /// Newton: objective decrease / Newton decrement threshold, relative to
    /// `1 + |objective|`. Hinge: maximal KKT violation of the dual.
    pub tolerance: f64,
    /// Newton steps, or SMO pair updates for the hinge loss.
    pub max_iterations: usize,
}

impl FitSpec {
    pub fn new(loss: Loss, kernel: KernelSpec, lambda: f64) -> Self {
        FitSpec {
            loss,
            kernel,
            lambda,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::input(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::input(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::input("max_iterations must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: Option<f64>,
    /// Objective after each accepted Newton step (empty for the dual solver).
    pub objective_history: Vec<f64>,
}

/// A fitted `f(x) = intercept + sum_i alpha_i K(x, x_i)`.
#[derive(Debug, Clone)]
pub struct Model {
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub training_inputs: Matrix,
    pub kernel: KernelSpec,
    pub loss: Loss,
    pub lambda: f64,
    pub objective_value: f64,
    pub solver_report: SolverReport,
}

impl Model {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn dim(&self) -> usize {
        self.training_inputs.cols()
    }

    /// Decision values at new points.
    pub fn predict(&self, xstar: &Matrix) -> Result<Vec<f64>> {
        predict(self, xstar)
    }

    /// Decision values given the precomputed cross kernel `K(xstar_i, x_j)`.
    pub fn predict_from_cross_gram(&self, cross: &Matrix) -> Result<Vec<f64>> {
        let mut f = cross.matvec(&self.alpha)?;
        f.iter_mut().for_each(|v| *v += self.intercept);
        Ok(f)
    }

    /// `alphaᵀ K alpha`.
    pub fn penalty(&self, k: &KernelMatrix) -> Result<f64> {
        k.matrix().quadratic_form(&self.alpha)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        doc.try_into()
    }
}

/// On-disk layout of a [`Model`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelDocument {
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub objective: f64,
    pub n: usize,
    pub d: usize,
    pub loss: Loss,
    pub training_inputs: Vec<Vec<f64>>,
}

impl From<&Model> for ModelDocument {
    fn from(m: &Model) -> Self {
        ModelDocument {
            intercept: m.intercept,
            alpha: m.alpha.clone(),
            kernel: m.kernel,
            lambda: m.lambda,
            objective: m.objective_value,
            n: m.n(),
            d: m.dim(),
            loss: m.loss,
            training_inputs: m.training_inputs.iter_rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl TryFrom<ModelDocument> for Model {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        doc.kernel.validate()?;
        let x = Matrix::from_rows(&doc.training_inputs)?;
        if x.rows() != doc.n || doc.alpha.len() != doc.n || (doc.n > 0 && x.cols() != doc.d) {
            return Err(Error::input(format!(
                "model document declares n = {}, d = {} but holds {} coefficients and {}x{} inputs",
                doc.n,
                doc.d,
                doc.alpha.len(),
                x.rows(),
                x.cols()
            )));
        }
        Ok(Model {
            intercept: doc.intercept,
            alpha: doc.alpha,
            training_inputs: x,
            kernel: doc.kernel,
            loss: doc.loss,
            lambda: doc.lambda,
            objective_value: doc.objective,
            solver_report: SolverReport::default(),
        })
    }
}

pub(crate) fn validate_labels(y: &[f64]) -> Result<()> {
    for &v in y {
        check_label(v)?;
    }
    Ok(())
}

/// Labels must be ±1 and contain both classes.
pub(crate) fn validate_training_labels(y: &[f64]) -> Result<()> {
    if y.len() < 2 {
        return Err(Error::input(format!(
            "need at least 2 training points, got {}",
            y.len()
        )));
    }
    validate_labels(y)?;
    let positives = y.iter().filter(|&&v| v > 0.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::DegenerateFit(format!(
            "all {} training labels are {}",
            y.len(),
            y[0]
        )));
    }
    Ok(())
}

/// `sum_i l(y_i, b + (K alpha)_i) + lambda alphaᵀ K alpha`.
pub fn objective_alpha(
    y: &[f64],
    k: &KernelMatrix,
    intercept: f64,
    alpha: &[f64],
    lambda: f64,
    loss: Loss,
) -> Result<f64> {
    if y.len() != k.n() || alpha.len() != k.n() {
        return Err(Error::input(format!(
            "objective with {} labels, {} coefficients and a {}x{} kernel matrix",
            y.len(),
            alpha.len(),
            k.n(),
            k.n()
        )));
    }
    validate_labels(y)?;
    let k_alpha = k.apply(alpha)?;
    Ok(data_loss(loss, y, intercept, &k_alpha) + lambda * dot(alpha, &k_alpha))
}

/// `sum_i l(y_i, b + g_i)`.
#[inline]
pub(crate) fn data_loss(loss: Loss, y: &[f64], intercept: f64, fitted: &[f64]) -> f64 {
    y.iter()
        .zip(fitted)
        .map(|(&yi, &gi)| loss.of_margin(yi * (intercept + gi)))
        .sum()
}

/// Fits the criterion for `spec` on inputs `x` (one row per point).
pub fn fit(spec: &FitSpec, x: &Matrix, y: &[f64]) -> Result<Model> {
    spec.validate()?;
    if x.rows() != y.len() {
        return Err(Error::input(format!(
            "{} input rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    validate_training_labels(y)?;
    let k = kernel::gram_matrix(&spec.kernel, x)?;
    let sol = solve(spec, &k, y, None)?;
    Ok(sol.into_model(spec, x.clone()))
}

/// Raw solver output in the `(b, alpha)` form.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub lambda: f64,
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub report: SolverReport,
}

impl Solution {
    pub(crate) fn into_model(self, spec: &FitSpec, x: Matrix) -> Model {
        Model {
            intercept: self.intercept,
            alpha: self.alpha,
            training_inputs: x,
            kernel: spec.kernel,
            loss: spec.loss,
            lambda: spec.lambda,
            objective_value: self.objective,
            solver_report: self.report,
        }
    }
}

/// Dispatches to the per-loss solver on a precomputed Gram matrix.
pub(crate) fn solve(
    spec: &FitSpec,
    k: &KernelMatrix,
    y: &[f64],
    warm: Option<&Solution>,
) -> Result<Solution> {
    let (intercept, alpha, report) = match spec.loss {
        Loss::Squared => newton::solve_squared(k, y, spec.lambda)?,
        Loss::BinomialDeviance | Loss::Exponential => newton::solve_smooth(spec, k, y, warm)?,
        Loss::Hinge => {
            // Scaling by C_new / C_old keeps the start feasible and keeps
            // bounded variables at the bound.
            let warm_dual = warm.map(|w| {
                let scale = w.lambda / spec.lambda;
                let mut a = smo::dual_from_alpha(&w.alpha, y);
                a.iter_mut().for_each(|v| *v *= scale);
                a
            });
            let dual = smo::solve_dual(
                k.matrix(),
                y,
                smo::box_bound(spec.lambda),
                spec.tolerance,
                spec.max_iterations,
                warm_dual.as_deref(),
            )?;
            let alpha = smo::alpha_from_dual(&dual.a, y);
            let mut report = SolverReport {
                iterations: dual.iterations,
                converged: true,
                ..Default::default()
            };
            report.kkt_residual = Some(smo::kkt_residual_raw(
                k.matrix(),
                y,
                dual.intercept,
                &alpha,
                spec.lambda,
            )?);
            (dual.intercept, alpha, report)
        }
    };
    let objective = objective_alpha(y, k, intercept, &alpha, spec.lambda, spec.loss)?;
    Ok(Solution {
        lambda: spec.lambda,
        intercept,
        alpha,
        objective,
        report,
    })
}

/// `f_i = intercept + sum_j alpha_j K(xstar_i, x_j)`.
pub fn predict(model: &Model, xstar: &Matrix) -> Result<Vec<f64>> {
    if xstar.rows() == 0 {
        return Ok(Vec::new());
    }
    if xstar.cols() != model.dim() {
        return Err(Error::input(format!(
            "model was trained on dimension {}, got points of dimension {}",
            model.dim(),
            xstar.cols()
        )));
    }
    let cross = cross_gram(&model.kernel, xstar, &model.training_inputs)?;
    model.predict_from_cross_gram(&cross)
}

/// `sign(f)` with `sign(0) = +1`.
pub fn sign_labels(f: &[f64]) -> Vec<f64> {
    f.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect()
}

/// Class labels `sign(f(x))`, ties going to `+1`.
pub fn classify(model: &Model, xstar: &Matrix) -> Result<Vec<f64>> {
    Ok(sign_labels(&predict(model, xstar)?))
}

/// Fraction of positions where `predicted` and `truth` disagree.
pub fn error_rate(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    Ok(error_count(predicted, truth)? as f64 / predicted.len().max(1) as f64)
}

/// Number of positions where `predicted` and `truth` disagree.
pub fn error_count(predicted: &[f64], truth: &[f64]) -> Result<usize> {
    if predicted.len() != truth.len() {
        return Err(Error::input(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    Ok(predicted.iter().zip(truth).filter(|(a, b)| a != b).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Matrix, Vec<f64>) {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        (x, vec![-1.0, 1.0])
    }

    #[test]
    fn objective_at_zero_is_n_for_hinge() {
        let x = Matrix::from_rows(&[[0.0], [0.5], [2.0]]).unwrap();
        let k = kernel::gram_matrix(&KernelSpec::radial(1.0).unwrap(), &x).unwrap();
        let y = [1.0, -1.0, 1.0];
        let v = objective_alpha(&y, &k, 0.0, &[0.0; 3], 0.3, Loss::Hinge).unwrap();
        assert_eq!(v, 3.0);
        // with alpha = 0 the penalty vanishes whatever the intercept
        let v = objective_alpha(&y, &k, 0.7, &[0.0; 3], 5.0, Loss::Squared).unwrap();
        let data: f64 = y.iter().map(|yi| (1.0 - yi * 0.7f64).powi(2)).sum();
        assert_eq!(v, data);
    }

    #[test]
    fn objective_dimension_mismatch() {
        let k = KernelMatrix::from_matrix(Matrix::identity(2)).unwrap();
        assert!(objective_alpha(&[1.0], &k, 0.0, &[0.0, 0.0], 1.0, Loss::Hinge).is_err());
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let spec = FitSpec::new(Loss::Hinge, KernelSpec::radial(1.0).unwrap(), 1.0);
        assert!(matches!(
            fit(&spec, &x, &[1.0, 1.0]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(fit(&spec, &x, &[1.0, 0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn symmetric_pair_every_loss() {
        let (x, y) = toy();
        for loss in Loss::ALL {
            for lambda in [0.01, 1.0, 50.0] {
                let spec = FitSpec::new(loss, KernelSpec::radial(1.0).unwrap(), lambda);
                let m = fit(&spec, &x, &y).unwrap();
                assert!(m.intercept.abs() < 1e-9, "{loss} {lambda}: {}", m.intercept);
                assert!((m.alpha[0] + m.alpha[1]).abs() < 1e-9, "{loss}: {:?}", m.alpha);
                if lambda < 1.0 {
                    assert_eq!(classify(&m, &x).unwrap(), y, "{loss}");
                }
            }
        }
    }

    #[test]
    fn classify_tie_rule() {
        assert_eq!(sign_labels(&[-0.2, 0.0, 3.1]), vec![-1.0, 1.0, 1.0]);
    }

    #[test]
    fn error_rates() {
        assert_eq!(error_rate(&[1.0, -1.0], &[1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(error_rate(&[1.0, -1.0], &[-1.0, 1.0]).unwrap(), 1.0);
        assert!(error_rate(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn prediction_far_away_is_intercept() {
        let (x, y) = toy();
        let spec = FitSpec::new(Loss::BinomialDeviance, KernelSpec::radial(1.0).unwrap(), 0.1);
        let m = fit(&spec, &x, &y).unwrap();
        let far = Matrix::from_rows(&[[1e3]]).unwrap();
        let f = predict(&m, &far).unwrap();
        assert!((f[0] - m.intercept).abs() < 1e-10);
        assert!(predict(&m, &Matrix::from_rows(&[[0.0, 1.0]]).unwrap()).is_err());
    }
}
