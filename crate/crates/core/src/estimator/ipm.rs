//! Primal-dual interior-point method for the hinge dual.
//!
//! Pairwise updates crawl when the box bound is huge and the kernel matrix
//! is close to singular: many variables sit at the bound and progress along
//! flat directions is tiny. Newton steps on the barrier problem do not care
//! about either, so this solver takes over in that regime and hands a
//! nearly optimal point back for the final pairwise polish.
//!
//! Variables are scaled to `t = a / C` in `[0, 1]`. With duals `z, w >= 0`
//! for the two bounds and `nu` for `yᵀt = 0`, stationarity reads
//! `m_i - 1 - z_i + w_i = 0`, where `m_i` is the margin `y_i f_i` and `nu`
//! plays the intercept. Steps follow Mehrotra's predictor-corrector rule.

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};

const MAX_ITERATIONS: usize = 200;
const STEP_FRACTION: f64 = 0.995;

#[derive(Debug, Clone)]
pub(crate) struct IpmSolution {
    /// Dual variables in original units, strictly inside `(0, C)`.
    pub a: Vec<f64>,
    /// Upper slacks `1 - a_i / C`.
    pub s: Vec<f64>,
    /// Lower-bound duals: positive where `a_i` should be 0.
    pub z: Vec<f64>,
    /// Upper-bound duals: positive where `a_i` should be `C`.
    pub w: Vec<f64>,
}

/// Largest step in `(0, 1]` keeping `v + step * dv >= 0`.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

/// Runs until `mu < 1e-3 tolerance` with stationarity below `0.1 tolerance`
/// (or the rounding floor of the margins), for at most 200 iterations, or
/// until the Newton system can no longer be factored. The result is not
/// guaranteed optimal.
pub(crate) fn solve_dual_ipm(k: &Matrix, y: &[f64], c: f64, tolerance: f64) -> Result<IpmSolution> {
    let n = y.len();
    let mut t = vec![0.5; n];
    // Upper slack 1 - t, carried separately so it keeps full relative
    // precision as t approaches 1.
    let mut s = vec![0.5; n];
    let mut z = vec![1.0; n];
    let mut w = vec![1.0; n];
    let mut nu = 0.0;
    // Margins minus the intercept: y_i (K (y∘a))_i = C y_i (K (y∘t))_i.
    let margins = |t: &[f64]| -> Vec<f64> {
        let yt: Vec<f64> = t.iter().zip(y).map(|(ti, yi)| c * ti * yi).collect();
        (0..n)
            .map(|i| y[i] * crate::linalg::dot(k.row(i), &yt))
            .collect()
    };

    // Margins cannot be resolved below the rounding error of K (y∘a).
    let row_sum = (0..n)
        .map(|i| k.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let noise = 10.0 * f64::EPSILON * c * row_sum;
    let stationarity_tol = (0.1 * tolerance).max(noise);

    let mut system = Matrix::zeros(n + 1, n + 1);
    for _ in 0..MAX_ITERATIONS {
        let m = margins(&t);
        let r_d: Vec<f64> = (0..n).map(|i| m[i] - 1.0 + nu * y[i] - z[i] + w[i]).collect();
        let r_p: f64 = t.iter().zip(y).map(|(a, b)| a * b).sum();
        let mu = (0..n).map(|i| t[i] * z[i] + s[i] * w[i]).sum::<f64>() / (2 * n) as f64;
        let dual_inf = r_d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if mu < 1e-3 * tolerance && dual_inf < stationarity_tol && r_p.abs() < 1e-10 {
            return Ok(IpmSolution {
                a: t.iter().map(|v| v * c).collect(),
                s,
                z,
                w,
            });
        }

        // [[C Q + diag(z/t + w/s), y], [yᵀ, 0]]
        for i in 0..n {
            let row = system.row_mut(i);
            let ki = k.row(i);
            for j in 0..n {
                row[j] = c * y[i] * y[j] * ki[j];
            }
            row[i] += z[i] / t[i] + w[i] / s[i];
            row[n] = y[i];
        }
        {
            let last = system.row_mut(n);
            last[..n].copy_from_slice(y);
            last[n] = 0.0;
        }
        let Ok(lu) = Lu::factor(&system) else {
            break;
        };

        let direction = |t1: &[f64], t2: &[f64]| -> Result<(Vec<f64>, f64, Vec<f64>, Vec<f64>)> {
            let mut rhs: Vec<f64> = (0..n).map(|i| -r_d[i] + t1[i] / t[i] - t2[i] / s[i]).collect();
            rhs.push(-r_p);
            let sol = lu.solve(&rhs)?;
            let dt = sol[..n].to_vec();
            let dz = (0..n).map(|i| (t1[i] - z[i] * dt[i]) / t[i]).collect();
            let dw = (0..n).map(|i| (t2[i] + w[i] * dt[i]) / s[i]).collect();
            Ok((dt, sol[n], dz, dw))
        };
        let step_of = |dt: &[f64], dz: &[f64], dw: &[f64]| -> f64 {
            let ds: Vec<f64> = dt.iter().map(|v| -v).collect();
            max_step(&t, dt)
                .min(max_step(&s, &ds))
                .min(max_step(&z, dz))
                .min(max_step(&w, dw))
        };

        // Predictor.
        let t1: Vec<f64> = (0..n).map(|i| -t[i] * z[i]).collect();
        let t2: Vec<f64> = (0..n).map(|i| -s[i] * w[i]).collect();
        let (dt_a, _, dz_a, dw_a) = direction(&t1, &t2)?;
        let alpha = step_of(&dt_a, &dz_a, &dw_a);
        let mu_aff = (0..n)
            .map(|i| {
                (t[i] + alpha * dt_a[i]) * (z[i] + alpha * dz_a[i])
                    + (s[i] - alpha * dt_a[i]) * (w[i] + alpha * dw_a[i])
            })
            .sum::<f64>()
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let t1: Vec<f64> = (0..n)
            .map(|i| sigma * mu - t[i] * z[i] - dt_a[i] * dz_a[i])
            .collect();
        let t2: Vec<f64> = (0..n)
            .map(|i| sigma * mu - s[i] * w[i] + dt_a[i] * dw_a[i])
            .collect();
        let (dt, dnu, dz, dw) = direction(&t1, &t2)?;
        let alpha = (STEP_FRACTION * step_of(&dt, &dz, &dw)).min(1.0);
        for i in 0..n {
            t[i] += alpha * dt[i];
            s[i] -= alpha * dt[i];
            z[i] += alpha * dz[i];
            w[i] += alpha * dw[i];
        }
        nu += alpha * dnu;
        if t.iter().chain(&s).chain(&z).chain(&w).any(|v| !v.is_finite()) || !nu.is_finite() {
            return Err(Error::Numeric {
                message: "interior-point iterate became non-finite".into(),
                residual: dual_inf,
            });
        }
    }
    Ok(IpmSolution {
        a: t.iter().map(|v| v * c).collect(),
        s,
        z,
        w,
    })
}
