//! Second-order solvers for the smooth losses in the `(b, alpha)` form.
//!
//! With `f = b + K alpha`, `g_i = dl/df_i` and `w_i = d²l/df_i²`, the Newton
//! equations for the criterion factor through `K`. Stripping that factor
//! gives the bordered system
//!
//! ```text
//! [ W K + 2 lambda I   W 1 ] [ d_alpha ]   [ -(g + 2 lambda alpha) ]
//! [        1ᵀ           0  ] [ d_b     ] = [ -1ᵀ alpha             ]
//! ```
//!
//! which stays nonsingular when `K` is rank deficient and keeps iterates on
//! the representer `alpha = -g / (2 lambda)` at the optimum (so `1ᵀ alpha = 0`).

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::{self, dot, Matrix};
use crate::loss::Loss;

use super::{data_loss, FitSpec, Solution, SolverReport};

/// Added to every curvature weight before solving.
pub(crate) const CURVATURE_FLOOR: f64 = 1e-10;
pub(crate) const MAX_HALVINGS: usize = 50;
const ARMIJO: f64 = 1e-4;

/// Squared loss: `(1 - y f)^2 = (y - f)^2`, so the optimum solves
/// `[K + lambda I, 1; 1ᵀ, 0] [alpha; b] = [y; 0]` directly.
pub(super) fn solve_squared(
    k: &KernelMatrix,
    y: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>, SolverReport)> {
    let n = k.n();
    let mut a = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = k.get(i, j);
        }
        a[(i, i)] += lambda;
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
    }
    let mut rhs = y.to_vec();
    rhs.push(0.0);
    let mut sol = linalg::solve(&a, &rhs)?;
    let intercept = sol.pop().unwrap();
    Ok((
        intercept,
        sol,
        SolverReport {
            iterations: 1,
            converged: true,
            ..Default::default()
        },
    ))
}

/// Damped Newton for the deviance and exponential losses.
pub(super) fn solve_smooth(
    spec: &FitSpec,
    k: &KernelMatrix,
    y: &[f64],
    warm: Option<&super::Solution>,
) -> Result<(f64, Vec<f64>, SolverReport)> {
    let n = k.n();
    let loss = spec.loss;
    let lambda = spec.lambda;
    let (mut b, mut alpha) = match warm {
        Some(Solution {
            intercept, alpha, ..
        }) if alpha.len() == n => (*intercept, alpha.clone()),
        _ => (0.0, vec![0.0; n]),
    };
    let mut k_alpha = k.apply(&alpha)?;
    let mut obj = objective(loss, y, b, &alpha, &k_alpha, lambda);
    let mut report = SolverReport::default();
    report.objective_history.push(obj);

    let mut system = Matrix::zeros(n + 1, n + 1);
    let mut rhs = vec![0.0; n + 1];
    let mut grad = vec![0.0; n];
    let mut weight = vec![0.0; n];

    for iteration in 1..=spec.max_iterations {
        for i in 0..n {
            let m = y[i] * (b + k_alpha[i]);
            grad[i] = y[i] * loss.margin_derivative(m);
            weight[i] = loss.margin_curvature(m)? + CURVATURE_FLOOR;
        }
        for i in 0..n {
            let row = system.row_mut(i);
            for (j, out) in row[..n].iter_mut().enumerate() {
                *out = weight[i] * k.get(i, j);
            }
            row[i] += 2.0 * lambda;
            row[n] = weight[i];
            rhs[i] = -(grad[i] + 2.0 * lambda * alpha[i]);
        }
        {
            let last = system.row_mut(n);
            last[..n].iter_mut().for_each(|v| *v = 1.0);
            last[n] = 0.0;
        }
        rhs[n] = -alpha.iter().sum::<f64>();
        let mut step = linalg::solve(&system, &rhs)?;
        let db = step.pop().unwrap();
        let da = step;

        // Directional derivative of the objective along (da, db).
        let k_da = k.apply(&da)?;
        let penalty_grad: Vec<f64> = grad
            .iter()
            .zip(&alpha)
            .map(|(g, a)| g + 2.0 * lambda * a)
            .collect();
        let slope = dot(&k_da, &penalty_grad) + db * grad.iter().sum::<f64>();
        let scale = 1.0 + obj.abs();
        if slope.abs() <= 2.0 * spec.tolerance * scale {
            report.converged = true;
            report.iterations = iteration - 1;
            return Ok((b, alpha, report));
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let b_new = b + t * db;
            let alpha_new: Vec<f64> = alpha.iter().zip(&da).map(|(a, d)| a + t * d).collect();
            let k_alpha_new: Vec<f64> = k_alpha.iter().zip(&k_da).map(|(a, d)| a + t * d).collect();
            let obj_new = objective(loss, y, b_new, &alpha_new, &k_alpha_new, lambda);
            if obj_new.is_finite() && obj_new <= obj + ARMIJO * t * slope.min(0.0) {
                accepted = Some((b_new, alpha_new, k_alpha_new, obj_new));
                break;
            }
            t *= 0.5;
        }

        let Some((b_new, alpha_new, k_alpha_new, obj_new)) = accepted else {
            // No decrease left to find: fine if the Newton decrement says
            // we are already at the optimum.
            if -slope <= 2.0 * spec.tolerance * scale {
                report.converged = true;
                report.iterations = iteration - 1;
                return Ok((b, alpha, report));
            }
            return Err(Error::NonConvergence {
                iterations: iteration,
                last_objective: obj,
                residual: -slope,
            });
        };
        let decrease = obj - obj_new;
        b = b_new;
        alpha = alpha_new;
        k_alpha = k_alpha_new;
        obj = obj_new;
        report.objective_history.push(obj);
        report.iterations = iteration;

        if t == 1.0 && (decrease <= spec.tolerance * scale || -slope <= 2.0 * spec.tolerance * scale)
        {
            report.converged = true;
            return Ok((b, alpha, report));
        }
    }
    Err(Error::NonConvergence {
        iterations: spec.max_iterations,
        last_objective: obj,
        residual: f64::NAN,
    })
}

fn objective(loss: Loss, y: &[f64], b: f64, alpha: &[f64], k_alpha: &[f64], lambda: f64) -> f64 {
    data_loss(loss, y, b, k_alpha) + lambda * dot(alpha, k_alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::objective_alpha;
    use crate::kernel::{gram_matrix, KernelSpec};

    fn problem() -> (KernelMatrix, Vec<f64>) {
        let x = Matrix::from_rows(&[[0.0, 0.1], [0.4, -0.3], [1.2, 0.8], [-0.7, 0.5], [0.9, -1.1]])
            .unwrap();
        let k = gram_matrix(&KernelSpec::radial(0.8).unwrap(), &x).unwrap();
        (k, vec![1.0, -1.0, 1.0, -1.0, -1.0])
    }

    #[test]
    fn newton_iterates_decrease() {
        let (k, y) = problem();
        for loss in [Loss::BinomialDeviance, Loss::Exponential] {
            let spec = FitSpec::new(loss, KernelSpec::radial(0.8).unwrap(), 0.05);
            let (_, _, report) = solve_smooth(&spec, &k, &y, None).unwrap();
            assert!(report.converged);
            assert!(report
                .objective_history
                .windows(2)
                .all(|w| w[1] < w[0] || (w[0] - w[1]).abs() < 1e-14));
        }
    }

    #[test]
    fn squared_solution_is_stationary() {
        let (k, y) = problem();
        let lambda = 0.3;
        let (b, alpha, _) = solve_squared(&k, &y, lambda).unwrap();
        // gradient in b: -2 sum (y - f); gradient in alpha: 2K(-(y - f) + lambda alpha)
        let ka = k.apply(&alpha).unwrap();
        let resid: Vec<f64> = y.iter().zip(&ka).map(|(yi, f)| yi - b - f).collect();
        assert!(resid.iter().sum::<f64>().abs() < 1e-12);
        for (r, a) in resid.iter().zip(&alpha) {
            assert!((r - lambda * a).abs() < 1e-12);
        }
        let obj = objective_alpha(&y, &k, b, &alpha, lambda, Loss::Squared).unwrap();
        let nudged = objective_alpha(&y, &k, b + 1e-3, &alpha, lambda, Loss::Squared).unwrap();
        assert!(nudged > obj);
    }
}
