//! The criterion in eigen and feature coordinates.
//!
//! Writing `K alpha = U beta` with `beta = D Uᵀ alpha` turns the penalty
//! `alphaᵀ K alpha` into the generalized ridge `betaᵀ D⁻¹ beta`: eigenvector
//! `j` is penalized by `1 / d_j`. With `theta_j = beta_j / sqrt(d_j)` and
//! `H = U D^{1/2}` it becomes the plain ridge `thetaᵀ theta` on the features.
//! Directions with `d_j` at or below the rank threshold carry an infinite
//! penalty and are frozen at zero.
//!
//! [`fit_reparam`] solves the criterion directly in these coordinates, so it
//! is an independent route to the optimum found by [`super::fit`].

use crate::error::{Error, Result};
use crate::kernel::{
    eigendecompose, feature_matrix, gram_matrix, EigenDecomposition, KernelMatrix,
    DEFAULT_RANK_THRESHOLD,
};
use crate::linalg::{self, dot, Matrix};
use crate::loss::Loss;

use super::newton::{CURVATURE_FLOOR, MAX_HALVINGS};
use super::{data_loss, smo, validate_labels, validate_training_labels, FitSpec, Model, SolverReport};

/// Which coordinates [`fit_reparam_with`] optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parametrization {
    /// `(b, beta)` with penalty `lambda sum_j beta_j² / d_j`.
    #[default]
    Eigen,
    /// `(b, theta)` with penalty `lambda thetaᵀ theta`.
    Feature,
}

/// Coefficients of one fitted function in all three coordinate systems'
/// non-kernel forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ReparamCoefficients {
    pub intercept: f64,
    /// Coefficients on the columns of `U`; zero on null directions.
    pub beta: Vec<f64>,
    /// `beta_j / sqrt(d_j)` on retained directions, zero elsewhere.
    pub theta: Vec<f64>,
    pub threshold: f64,
}

impl ReparamCoefficients {
    /// `beta = D Uᵀ alpha`, with null directions dropped.
    pub fn from_alpha(
        eig: &EigenDecomposition,
        intercept: f64,
        alpha: &[f64],
        threshold: f64,
    ) -> Result<Self> {
        let ut_alpha = eig.eigenvectors().matvec_transposed(alpha)?;
        let d = eig.eigenvalues();
        let beta: Vec<f64> = (0..eig.n())
            .map(|j| if d[j] > threshold { d[j] * ut_alpha[j] } else { 0.0 })
            .collect();
        Ok(Self::from_beta(eig, intercept, beta, threshold))
    }

    fn from_beta(eig: &EigenDecomposition, intercept: f64, beta: Vec<f64>, threshold: f64) -> Self {
        let d = eig.eigenvalues();
        let theta = beta
            .iter()
            .zip(d)
            .map(|(&b, &dj)| if dj > threshold { b / dj.sqrt() } else { 0.0 })
            .collect();
        ReparamCoefficients {
            intercept,
            beta,
            theta,
            threshold,
        }
    }

    /// `U beta`: the fitted values on the training points, less the intercept.
    pub fn fitted(&self, eig: &EigenDecomposition) -> Result<Vec<f64>> {
        eig.eigenvectors().matvec(&self.beta)
    }

    /// `sum_{d_j > threshold} beta_j² / d_j`.
    pub fn generalized_ridge_penalty(&self, eig: &EigenDecomposition) -> f64 {
        self.beta
            .iter()
            .zip(eig.eigenvalues())
            .filter(|(_, &d)| d > self.threshold)
            .map(|(b, d)| b * b / d)
            .sum()
    }

    /// `thetaᵀ theta`.
    pub fn feature_ridge_penalty(&self) -> f64 {
        dot(&self.theta, &self.theta)
    }

    /// `alpha = U D⁻¹ beta` over retained directions: the representer
    /// coefficients with `K alpha = U beta`.
    pub fn to_alpha(&self, eig: &EigenDecomposition) -> Result<Vec<f64>> {
        let d = eig.eigenvalues();
        let scaled: Vec<f64> = self
            .beta
            .iter()
            .zip(d)
            .map(|(&b, &dj)| if dj > self.threshold { b / dj } else { 0.0 })
            .collect();
        eig.eigenvectors().matvec(&scaled)
    }
}

/// Criterion in eigen coordinates with the default `1e-12` rank threshold.
pub fn objective_reparam(
    y: &[f64],
    eig: &EigenDecomposition,
    intercept: f64,
    beta: &[f64],
    lambda: f64,
    loss: Loss,
) -> Result<f64> {
    objective_reparam_with_threshold(y, eig, intercept, beta, lambda, loss, DEFAULT_RANK_THRESHOLD)
}

/// `sum_i l(y_i, b + (U beta)_i) + lambda sum_{d_j > threshold} beta_j² / d_j`.
///
/// A non-zero `beta_j` on a direction with `d_j <= threshold` has infinite
/// penalty and is rejected as invalid input.
pub fn objective_reparam_with_threshold(
    y: &[f64],
    eig: &EigenDecomposition,
    intercept: f64,
    beta: &[f64],
    lambda: f64,
    loss: Loss,
    threshold: f64,
) -> Result<f64> {
    if y.len() != eig.n() || beta.len() != eig.n() {
        return Err(Error::input(format!(
            "objective with {} labels, {} coefficients and {} eigenpairs",
            y.len(),
            beta.len(),
            eig.n()
        )));
    }
    validate_labels(y)?;
    let d = eig.eigenvalues();
    let mut penalty = 0.0;
    for (j, (&b, &dj)) in beta.iter().zip(d).enumerate() {
        if dj > threshold {
            penalty += b * b / dj;
        } else if b != 0.0 {
            return Err(Error::input(format!(
                "beta[{j}] = {b} lies on a null direction (eigenvalue {dj:e})"
            )));
        }
    }
    let fitted = eig.eigenvectors().matvec(beta)?;
    Ok(data_loss(loss, y, intercept, &fitted) + lambda * penalty)
}

/// Fits in eigen coordinates; see [`fit_reparam_with`].
pub fn fit_reparam(spec: &FitSpec, x: &Matrix, y: &[f64]) -> Result<(Model, ReparamCoefficients)> {
    fit_reparam_with(spec, x, y, Parametrization::Eigen, DEFAULT_RANK_THRESHOLD)
}

/// Fits the criterion in eigen (`beta`) or feature (`theta`) coordinates.
///
/// Smooth losses run damped Newton on `(b, c)` where `c` is `beta` or
/// `theta` restricted to eigenvalues above `threshold`. The hinge loss is
/// solved through the dual of the feature-space problem, whose Gram matrix
/// is `H_r H_rᵀ` over the retained features. The returned [`Model`] carries
/// `alpha = U D⁻¹ beta`, so it predicts like any other model.
pub fn fit_reparam_with(
    spec: &FitSpec,
    x: &Matrix,
    y: &[f64],
    form: Parametrization,
    threshold: f64,
) -> Result<(Model, ReparamCoefficients)> {
    spec.validate()?;
    if x.rows() != y.len() {
        return Err(Error::input(format!(
            "{} input rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    validate_training_labels(y)?;
    let k = gram_matrix(&spec.kernel, x)?;
    let eig = eigendecompose(&k)?;
    let (coef, report) = solve_reparam(spec, &eig, y, form, threshold)?;
    let alpha = coef.to_alpha(&eig)?;
    let objective = super::objective_alpha(y, &k, coef.intercept, &alpha, spec.lambda, spec.loss)?;
    let model = Model {
        intercept: coef.intercept,
        alpha,
        training_inputs: x.clone(),
        kernel: spec.kernel,
        loss: spec.loss,
        lambda: spec.lambda,
        objective_value: objective,
        solver_report: report,
    };
    Ok((model, coef))
}

pub(crate) fn solve_reparam(
    spec: &FitSpec,
    eig: &EigenDecomposition,
    y: &[f64],
    form: Parametrization,
    threshold: f64,
) -> Result<(ReparamCoefficients, SolverReport)> {
    let retained = eig.retained(threshold);
    let d = eig.eigenvalues();
    let n = eig.n();

    if spec.loss == Loss::Hinge {
        let h = feature_matrix(eig)?;
        let hr = select_columns(h.matrix(), &retained);
        let kr = KernelMatrix::from_matrix(hr.matmul(&hr.transpose())?)?;
        let dual = smo::solve_dual(
            kr.matrix(),
            y,
            smo::box_bound(spec.lambda),
            spec.tolerance,
            spec.max_iterations,
            None,
        )?;
        let expansion = smo::alpha_from_dual(&dual.a, y);
        let theta_r = hr.matvec_transposed(&expansion)?;
        let mut beta = vec![0.0; n];
        for (&j, t) in retained.iter().zip(&theta_r) {
            beta[j] = d[j].sqrt() * t;
        }
        let report = SolverReport {
            iterations: dual.iterations,
            converged: true,
            kkt_residual: Some(smo::kkt_residual_raw(
                kr.matrix(),
                y,
                dual.intercept,
                &expansion,
                spec.lambda,
            )?),
            ..Default::default()
        };
        return Ok((
            ReparamCoefficients::from_beta(eig, dual.intercept, beta, threshold),
            report,
        ));
    }

    // Basis columns and per-coordinate penalty weights.
    let u = eig.eigenvectors();
    let (basis, weights): (Matrix, Vec<f64>) = match form {
        Parametrization::Eigen => (
            select_columns(u, &retained),
            retained.iter().map(|&j| 1.0 / d[j]).collect(),
        ),
        Parametrization::Feature => {
            let mut hr = select_columns(u, &retained);
            for i in 0..n {
                for (v, &j) in hr.row_mut(i).iter_mut().zip(&retained) {
                    *v *= d[j].sqrt();
                }
            }
            (hr, vec![1.0; retained.len()])
        }
    };
    let (b, c, report) = newton_in_basis(spec, &basis, &weights, y)?;
    let mut beta = vec![0.0; n];
    for (&j, cj) in retained.iter().zip(&c) {
        beta[j] = match form {
            Parametrization::Eigen => *cj,
            Parametrization::Feature => d[j].sqrt() * cj,
        };
    }
    Ok((ReparamCoefficients::from_beta(eig, b, beta, threshold), report))
}

fn select_columns(m: &Matrix, cols: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), cols.len());
    for i in 0..m.rows() {
        let src = m.row(i);
        for (dst, &j) in out.row_mut(i).iter_mut().zip(cols) {
            *dst = src[j];
        }
    }
    out
}

/// Damped Newton for `sum_i l(y_i, b + (B c)_i) + lambda sum_j w_j c_j²`.
fn newton_in_basis(
    spec: &FitSpec,
    basis: &Matrix,
    weights: &[f64],
    y: &[f64],
) -> Result<(f64, Vec<f64>, SolverReport)> {
    let loss = spec.loss;
    let lambda = spec.lambda;
    let (n, r) = (basis.rows(), basis.cols());
    let objective = |b: f64, c: &[f64], fitted: &[f64]| {
        let pen: f64 = c.iter().zip(weights).map(|(ci, w)| w * ci * ci).sum();
        data_loss(loss, y, b, fitted) + lambda * pen
    };

    let mut b = 0.0;
    let mut c = vec![0.0; r];
    let mut fitted = vec![0.0; n];
    let mut obj = objective(b, &c, &fitted);
    let mut report = SolverReport::default();
    report.objective_history.push(obj);

    let mut grad = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for iteration in 1..=spec.max_iterations {
        for i in 0..n {
            let m = y[i] * (b + fitted[i]);
            grad[i] = y[i] * loss.margin_derivative(m);
            weight[i] = loss.margin_curvature(m)? + CURVATURE_FLOOR;
        }
        // Index 0 is the intercept, 1..=r the basis coefficients.
        let mut hess = Matrix::zeros(r + 1, r + 1);
        let mut rhs = vec![0.0; r + 1];
        rhs[0] = -grad.iter().sum::<f64>();
        hess[(0, 0)] = weight.iter().sum();
        for i in 0..n {
            let row = basis.row(i);
            let wi = weight[i];
            for p in 0..r {
                let wb = wi * row[p];
                hess[(0, p + 1)] += wb;
                rhs[p + 1] -= grad[i] * row[p];
                let hrow = hess.row_mut(p + 1);
                for q in p..r {
                    hrow[q + 1] += wb * row[q];
                }
            }
        }
        for p in 0..r {
            hess[(p + 1, 0)] = hess[(0, p + 1)];
            hess[(p + 1, p + 1)] += 2.0 * lambda * weights[p];
            rhs[p + 1] -= 2.0 * lambda * weights[p] * c[p];
            for q in (p + 1)..r {
                hess[(q + 1, p + 1)] = hess[(p + 1, q + 1)];
            }
        }
        let step = linalg::solve(&hess, &rhs)?;
        // rhs is the negative gradient.
        let slope = -dot(&step, &rhs);
        let db = step[0];
        let dc = &step[1..];
        let d_fitted = basis.matvec(dc)?;
        let scale = 1.0 + obj.abs();
        // Newton decrement: already at the optimum up to rounding.
        if slope.abs() <= 2.0 * spec.tolerance * scale {
            report.converged = true;
            report.iterations = iteration - 1;
            return Ok((b, c, report));
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let b_new = b + t * db;
            let c_new: Vec<f64> = c.iter().zip(dc).map(|(a, d)| a + t * d).collect();
            let f_new: Vec<f64> = fitted.iter().zip(&d_fitted).map(|(a, d)| a + t * d).collect();
            let obj_new = objective(b_new, &c_new, &f_new);
            if obj_new.is_finite() && obj_new <= obj + 1e-4 * t * slope.min(0.0) {
                accepted = Some((b_new, c_new, f_new, obj_new));
                break;
            }
            t *= 0.5;
        }
        let Some((b_new, c_new, f_new, obj_new)) = accepted else {
            if -slope <= 2.0 * spec.tolerance * scale {
                report.converged = true;
                report.iterations = iteration - 1;
                return Ok((b, c, report));
            }
            return Err(Error::NonConvergence {
                iterations: iteration,
                last_objective: obj,
                residual: -slope,
            });
        };
        let decrease = obj - obj_new;
        b = b_new;
        c = c_new;
        fitted = f_new;
        obj = obj_new;
        report.objective_history.push(obj);
        report.iterations = iteration;
        if t == 1.0 && (decrease <= spec.tolerance * scale || -slope <= 2.0 * spec.tolerance * scale)
        {
            report.converged = true;
            return Ok((b, c, report));
        }
    }
    Err(Error::NonConvergence {
        iterations: spec.max_iterations,
        last_objective: obj,
        residual: f64::NAN,
    })
}
