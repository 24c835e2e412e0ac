//! Hinge-loss solver.
//!
//! With slack `xi_i = max(0, 1 - y_i f_i)` the criterion
//! `sum_i xi_i + lambda alphaᵀ K alpha` is, after dividing by `2 lambda`,
//! the soft-margin SVM `1/2 |f|² + C sum_i xi_i` with `C = 1 / (2 lambda)`.
//! Its dual is
//!
//! ```text
//! min_a  1/2 aᵀ Q a - 1ᵀ a    s.t.  0 <= a_i <= C,  yᵀ a = 0,
//! Q_ij = y_i y_j K_ij
//! ```
//!
//! and the primal expansion coefficients are `alpha_i = y_i a_i`. The
//! equality constraint comes from the intercept being unpenalized.
//!
//! The dual is solved by sequential minimal optimization with second-order
//! working-pair selection (Fan, Chen and Lin, 2005), the scheme used by
//! LIBSVM. Optimality is measured by the maximal violating pair gap, which
//! is in the units of `f`.

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::Matrix;
use crate::loss::Loss;

use super::{ipm, Model};

/// Curvature substituted for non-positive `K_ii + K_jj - 2 K_ij`.
const TAU: f64 = 1e-12;

/// Box bound of the dual for penalty weight `lambda`.
pub fn box_bound(lambda: f64) -> f64 {
    1.0 / (2.0 * lambda)
}

pub(crate) fn dual_from_alpha(alpha: &[f64], y: &[f64]) -> Vec<f64> {
    alpha.iter().zip(y).map(|(a, yi)| a * yi).collect()
}

pub(crate) fn alpha_from_dual(a: &[f64], y: &[f64]) -> Vec<f64> {
    a.iter().zip(y).map(|(ai, yi)| ai * yi).collect()
}

#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub a: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

/// Pair updates allowed before handing over to the interior-point solver.
fn smo_stage_budget(n: usize) -> usize {
    100 * n.max(10)
}

/// Solves the hinge dual on Gram matrix `k`.
///
/// `warm` is used when it is feasible for `c` (box and equality
/// constraint); otherwise the solver starts from zero. Pair updates run
/// first; if they have not converged after a budget proportional to `n`,
/// an interior-point solve produces a nearly optimal point that is rounded
/// onto its active set and polished by further pair updates. Either way
/// the result passes the same gap test, and `max_iterations` caps the
/// total number of pair updates.
///
/// The gap test uses `max(tolerance, 10 eps C max_i sum_j |K_ij|)`: below
/// that the margins are not resolved in floating point.
pub(crate) fn solve_dual(
    k: &Matrix,
    y: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
    warm: Option<&[f64]>,
) -> Result<DualSolution> {
    let n = y.len();
    let tolerance = tolerance.max(margin_resolution(k, c));
    let start = match warm {
        Some(w) if is_feasible(w, y, c) => w.to_vec(),
        _ => vec![0.0; n],
    };
    let stage = smo_stage_budget(n).min(max_iterations);
    let first = match pair_updates(k, y, c, tolerance, stage, start) {
        Ok(sol) => return Ok(sol),
        Err(stalled) => stalled,
    };
    if stage == max_iterations {
        return Err(first.into_error(k, y));
    }
    let ipm = ipm::solve_dual_ipm(k, y, c, tolerance)?;
    let polished_start = round_to_active_set(k, y, c, tolerance, &ipm);
    match pair_updates(
        k,
        y,
        c,
        tolerance,
        max_iterations - first.iterations,
        polished_start,
    ) {
        Ok(mut sol) => {
            sol.iterations += first.iterations;
            Ok(sol)
        }
        Err(mut stalled) => {
            stalled.iterations += first.iterations;
            Err(stalled.into_error(k, y))
        }
    }
}

/// State of a pair-update run that hit its iteration cap.
struct Stalled {
    a: Vec<f64>,
    gap: f64,
    iterations: usize,
}

impl Stalled {
    fn into_error(self, k: &Matrix, y: &[f64]) -> Error {
        Error::NonConvergence {
            iterations: self.iterations,
            last_objective: dual_objective(k, y, &self.a),
            residual: self.gap,
        }
    }
}

fn pair_updates(
    k: &Matrix,
    y: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
    mut a: Vec<f64>,
) -> std::result::Result<DualSolution, Stalled> {
    let n = y.len();
    let diag: Vec<f64> = (0..n).map(|i| k[(i, i)]).collect();
    let mut grad = full_gradient(k, y, &a);
    let mut iterations = 0usize;

    loop {
        let selection = select_pair(k, y, &a, &grad, &diag, c);
        let converged = match selection {
            None => true,
            Some((_, _, gap)) => gap < tolerance,
        };
        if converged {
            // The incremental gradient drifts; confirm on a fresh one.
            grad = full_gradient(k, y, &a);
            match select_pair(k, y, &a, &grad, &diag, c) {
                None => break,
                Some((_, _, gap)) if gap < tolerance => break,
                _ => {}
            }
            continue;
        }
        if iterations >= max_iterations {
            return Err(Stalled {
                a,
                gap: selection.map_or(0.0, |s| s.2),
                iterations,
            });
        }
        let (i, j, _) = selection.unwrap();
        update_pair(k, y, &mut a, &mut grad, &diag, c, i, j);
        iterations += 1;
    }

    let intercept = intercept(y, &a, &grad, c);
    Ok(DualSolution {
        a,
        intercept,
        iterations,
    })
}

/// Rounding error of the margins `y_i (K (y∘a))_i` for `0 <= a <= C`.
fn margin_resolution(k: &Matrix, c: f64) -> f64 {
    let row_sum = k
        .iter_rows()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    10.0 * f64::EPSILON * c * row_sum
}

/// Turns an interior point into a feasible start on its predicted active
/// set: variables whose bound dual dominates go to the bound, the free
/// ones are re-solved so that their margins are exactly 1, and variables
/// that violate their bound or margin condition switch sets until none
/// does (or a few rounds pass). The equality constraint is restored last.
fn round_to_active_set(
    k: &Matrix,
    y: &[f64],
    c: f64,
    tolerance: f64,
    ipm: &ipm::IpmSolution,
) -> Vec<f64> {
    const ROUNDS: usize = 20;
    let n = y.len();
    let mut a: Vec<f64> = (0..n)
        .map(|i| {
            if ipm.z[i] > ipm.a[i] / c {
                0.0
            } else if ipm.w[i] > ipm.s[i] {
                c
            } else {
                ipm.a[i]
            }
        })
        .collect();
    let mut free: Vec<bool> = a.iter().map(|&v| v > 0.0 && v < c).collect();

    for _ in 0..ROUNDS {
        let Some((values, b)) = solve_free(k, y, &a, &free) else {
            break;
        };
        let mut changed = false;
        for (i, v) in values {
            if v <= 0.0 {
                a[i] = 0.0;
                free[i] = false;
                changed = true;
            } else if v >= c {
                a[i] = c;
                free[i] = false;
                changed = true;
            } else {
                a[i] = v;
            }
        }
        if !changed {
            let alpha = alpha_from_dual(&a, y);
            let bounded: Vec<usize> = (0..n).filter(|&i| !free[i]).collect();
            for i in bounded {
                let margin = y[i] * (crate::linalg::dot(k.row(i), &alpha) + b);
                let violated = if a[i] == 0.0 {
                    margin < 1.0 - tolerance
                } else {
                    margin > 1.0 + tolerance
                };
                if violated {
                    free[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    restore_equality(&mut a, y, c);
    a
}

/// Solves `[[K_FF, 1], [1ᵀ, 0]] [alpha_F; b] = [y_F - K_FB alpha_B; -sum alpha_B]`
/// and returns the free dual values `y_i alpha_i` with the intercept.
fn solve_free(
    k: &Matrix,
    y: &[f64],
    a: &[f64],
    free: &[bool],
) -> Option<(Vec<(usize, f64)>, f64)> {
    let n = y.len();
    let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
    let m = idx.len();
    let alpha_bound: Vec<f64> = (0..n)
        .map(|i| if free[i] { 0.0 } else { a[i] * y[i] })
        .collect();
    let mut system = Matrix::zeros(m + 1, m + 1);
    let mut rhs = vec![0.0; m + 1];
    for (r, &i) in idx.iter().enumerate() {
        let ki = k.row(i);
        let row = system.row_mut(r);
        for (col, &j) in idx.iter().enumerate() {
            row[col] = ki[j];
        }
        row[m] = 1.0;
        rhs[r] = y[i] - crate::linalg::dot(ki, &alpha_bound);
    }
    system.row_mut(m)[..m].iter_mut().for_each(|v| *v = 1.0);
    rhs[m] = -alpha_bound.iter().sum::<f64>();
    let sol = crate::linalg::solve(&system, &rhs).ok()?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let values = idx.iter().zip(&sol).map(|(&i, s)| (i, s * y[i])).collect();
    Some((values, sol[m]))
}

/// Moves variables within the box until `sum_i y_i a_i = 0`.
fn restore_equality(a: &mut [f64], y: &[f64], c: f64) {
    let mut r: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
    // Lower variables with y_i = sign(r) first, then raise the others.
    for pass in 0..2 {
        for i in 0..a.len() {
            if r == 0.0 {
                return;
            }
            let same_sign = (y[i] > 0.0) == (r > 0.0);
            let delta = if pass == 0 && same_sign {
                a[i].min(r.abs())
            } else if pass == 1 && !same_sign {
                (c - a[i]).min(r.abs())
            } else {
                continue;
            };
            if pass == 0 {
                a[i] -= delta;
            } else {
                a[i] += delta;
            }
            r -= r.signum() * delta;
        }
    }
}

fn is_feasible(a: &[f64], y: &[f64], c: f64) -> bool {
    a.len() == y.len()
        && a.iter().all(|&v| (0.0..=c).contains(&v))
        && a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>().abs() <= 1e-10 * (1.0 + c)
}

/// Gradient of the dual objective: `G_i = y_i (K (y∘a))_i - 1`.
fn full_gradient(k: &Matrix, y: &[f64], a: &[f64]) -> Vec<f64> {
    let ya = alpha_from_dual(a, y);
    let n = y.len();
    (0..n)
        .map(|i| y[i] * crate::linalg::dot(k.row(i), &ya) - 1.0)
        .collect()
}

/// `1/2 aᵀ Q a - 1ᵀ a`.
fn dual_objective(k: &Matrix, y: &[f64], a: &[f64]) -> f64 {
    let q = k
        .quadratic_form(&alpha_from_dual(a, y))
        .unwrap_or(f64::NAN);
    0.5 * q - a.iter().sum::<f64>()
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a < c
    } else {
        a > 0.0
    }
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a > 0.0
    } else {
        a < c
    }
}

/// Second-order working-set selection. Returns `(i, j, gap)` or `None`
/// when no violating pair exists.
fn select_pair(
    k: &Matrix,
    y: &[f64],
    a: &[f64],
    grad: &[f64],
    diag: &[f64],
    c: f64,
) -> Option<(usize, usize, f64)> {
    let n = y.len();
    let mut g_max = f64::NEG_INFINITY;
    let mut i_best = None;
    for t in 0..n {
        if in_up(y[t], a[t], c) {
            let v = -y[t] * grad[t];
            if v >= g_max {
                g_max = v;
                i_best = Some(t);
            }
        }
    }
    let i = i_best?;
    let k_i = k.row(i);

    let mut g_max2 = f64::NEG_INFINITY;
    let mut j_best = None;
    let mut best_obj = f64::INFINITY;
    for t in 0..n {
        if !in_low(y[t], a[t], c) {
            continue;
        }
        let v = y[t] * grad[t];
        if v >= g_max2 {
            g_max2 = v;
        }
        let diff = g_max + v;
        if diff > 0.0 {
            let mut quad = diag[i] + diag[t] - 2.0 * k_i[t];
            if quad <= 0.0 {
                quad = TAU;
            }
            let obj = -(diff * diff) / quad;
            if obj <= best_obj {
                best_obj = obj;
                j_best = Some(t);
            }
        }
    }
    let gap = g_max + g_max2;
    j_best.map(|j| (i, j, gap))
}

#[allow(clippy::too_many_arguments)]
fn update_pair(
    k: &Matrix,
    y: &[f64],
    a: &mut [f64],
    grad: &mut [f64],
    diag: &[f64],
    c: f64,
    i: usize,
    j: usize,
) {
    let (old_i, old_j) = (a[i], a[j]);
    let k_ij = k[(i, j)];
    if y[i] != y[j] {
        let mut quad = diag[i] + diag[j] - 2.0 * k_ij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = a[i] - a[j];
        a[i] += delta;
        a[j] += delta;
        if diff > 0.0 {
            if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = diff;
            }
        } else if a[i] < 0.0 {
            a[i] = 0.0;
            a[j] = -diff;
        }
        if diff > 0.0 {
            if a[i] > c {
                a[i] = c;
                a[j] = c - diff;
            }
        } else if a[j] > c {
            a[j] = c;
            a[i] = c + diff;
        }
    } else {
        let mut quad = diag[i] + diag[j] - 2.0 * k_ij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = a[i] + a[j];
        a[i] -= delta;
        a[j] += delta;
        if sum > c {
            if a[i] > c {
                a[i] = c;
                a[j] = sum - c;
            }
        } else if a[j] < 0.0 {
            a[j] = 0.0;
            a[i] = sum;
        }
        if sum > c {
            if a[j] > c {
                a[j] = c;
                a[i] = sum - c;
            }
        } else if a[i] < 0.0 {
            a[i] = 0.0;
            a[j] = sum;
        }
    }
    let d_i = (a[i] - old_i) * y[i];
    let d_j = (a[j] - old_j) * y[j];
    let (k_i, k_j) = (k.row(i), k.row(j));
    for t in 0..y.len() {
        grad[t] += y[t] * (k_i[t] * d_i + k_j[t] * d_j);
    }
}

/// Intercept from the KKT conditions: average of `-y_i G_i` over free
/// variables, or the midpoint of the feasible interval when none is free.
fn intercept(y: &[f64], a: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if a[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if a[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (upper + lower)
    };
    -rho
}

/// Largest violation of the optimality conditions of the hinge dual at the
/// point `(intercept, alpha)`, with `a_i = y_i alpha_i` and `C = 1/(2 lambda)`.
///
/// Checked conditions, each contributing its violation:
/// `0 <= a_i <= C`; `sum_i y_i a_i = 0`; and complementary slackness on the
/// margins `m_i = y_i f_i`: `m_i >= 1` where `a_i = 0`, `m_i <= 1` where
/// `a_i = C`, `m_i = 1` in between.
pub(crate) fn kkt_residual_raw(
    k: &Matrix,
    y: &[f64],
    intercept: f64,
    alpha: &[f64],
    lambda: f64,
) -> Result<f64> {
    let c = box_bound(lambda);
    let f = k.matvec(alpha)?;
    let mut worst: f64 = alpha.iter().sum::<f64>().abs();
    for ((&yi, &ai), &fi) in y.iter().zip(alpha).zip(&f) {
        let dual = yi * ai;
        let margin = yi * (intercept + fi);
        let box_violation = (-dual).max(dual - c).max(0.0);
        let slack_violation = if dual <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if dual >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(box_violation).max(slack_violation);
    }
    Ok(worst)
}

/// KKT residual of a hinge-loss model on its training data; `0` exactly at
/// the optimum. `k` must be the training Gram matrix.
pub fn kkt_residual(model: &Model, y: &[f64], k: &KernelMatrix, lambda: f64) -> Result<f64> {
    if model.loss != Loss::Hinge {
        return Err(Error::input(format!(
            "KKT residual is defined for hinge-loss models, got {}",
            model.loss
        )));
    }
    if y.len() != model.n() || k.n() != model.n() {
        return Err(Error::input(format!(
            "model has {} coefficients, got {} labels and a {}-point kernel matrix",
            model.n(),
            y.len(),
            k.n()
        )));
    }
    super::validate_labels(y)?;
    kkt_residual_raw(k.matrix(), y, model.intercept, &model.alpha, lambda)
}
