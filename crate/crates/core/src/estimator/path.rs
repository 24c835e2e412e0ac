//! Sweeps over a descending grid of penalty weights.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{cross_gram, gram_matrix, KernelMatrix, KernelSpec};
use crate::linalg::{dot, Matrix};
use crate::loss::Loss;

use super::{
    error_count, sign_labels, solve, validate_labels, validate_training_labels, FitSpec, Solution,
    DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};

/// Everything in a [`FitSpec`] except the penalty weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub loss: Loss,
    pub kernel: KernelSpec,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl PathSpec {
    pub fn new(loss: Loss, kernel: KernelSpec) -> Self {
        PathSpec {
            loss,
            kernel,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn at(&self, lambda: f64) -> FitSpec {
        FitSpec {
            loss: self.loss,
            kernel: self.kernel,
            lambda,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathMode {
    /// Sequential fits, each started from the previous solution.
    #[default]
    Warm,
    /// Independent cold-started fits, run concurrently.
    ColdParallel,
}

/// Summary of the fit at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub lambda: f64,
    pub training_errors: usize,
    pub training_error: f64,
    pub test_error: Option<f64>,
    pub objective_value: f64,
    /// `alphaᵀ K alpha`.
    pub penalty: f64,
    pub intercept: f64,
    /// Number of non-zero expansion coefficients.
    pub support: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub lambda_grid: Vec<f64>,
    pub records: Vec<PathRecord>,
}

impl PathResult {
    /// Record with the fewest training errors; ties go to the smaller
    /// penalty weight.
    pub fn min_training_errors(&self) -> Option<&PathRecord> {
        self.records.iter().rev().min_by_key(|r| r.training_errors)
    }

    /// Index of the record with the lowest test error (first on ties).
    pub fn argmin_test_error(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.records.iter().enumerate() {
            if let Some(e) = r.test_error {
                if best.is_none_or(|(_, b)| e < b) {
                    best = Some((i, e));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// `count` log-spaced values from `max` down to `min`.
pub fn log_grid(max: f64, min: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || count == 0 {
        return Err(Error::input(format!(
            "lambda grid needs 0 < min <= max and count >= 1, got {min}:{max}:{count}"
        )));
    }
    if count == 1 {
        return Ok(vec![max]);
    }
    if max == min {
        return Err(Error::input("lambda grid with count > 1 needs min < max"));
    }
    let (hi, lo) = (max.log10(), min.log10());
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == 0 {
                max
            } else if i == count - 1 {
                min
            } else {
                10f64.powf(hi - step * i as f64)
            }
        })
        .collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input("lambda grid is empty"));
    }
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::input("lambda grid values must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::input("lambda grid must be strictly descending"));
    }
    Ok(())
}

/// Fits every grid value on `(x, y)`, optionally scoring on `test`.
pub fn lambda_path(
    spec: &PathSpec,
    x: &Matrix,
    y: &[f64],
    grid: &[f64],
    test: Option<(&Matrix, &[f64])>,
    mode: PathMode,
) -> Result<PathResult> {
    spec.kernel.validate()?;
    if x.rows() != y.len() {
        return Err(Error::input(format!(
            "{} input rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let k = gram_matrix(&spec.kernel, x)?;
    let test_cross = match test {
        Some((xt, yt)) => {
            if xt.rows() != yt.len() {
                return Err(Error::input("test inputs and labels differ in length"));
            }
            validate_labels(yt)?;
            Some((cross_gram(&spec.kernel, xt, x)?, yt))
        }
        None => None,
    };
    lambda_path_on_gram(
        spec,
        &k,
        y,
        grid,
        test_cross.as_ref().map(|(m, yt)| (m, *yt)),
        mode,
    )
}

/// [`lambda_path`] with the training Gram matrix and test cross kernel
/// already computed.
pub fn lambda_path_on_gram(
    spec: &PathSpec,
    k: &KernelMatrix,
    y: &[f64],
    grid: &[f64],
    test: Option<(&Matrix, &[f64])>,
    mode: PathMode,
) -> Result<PathResult> {
    check_grid(grid)?;
    validate_training_labels(y)?;
    if k.n() != y.len() {
        return Err(Error::input("kernel matrix and labels differ in size"));
    }
    for &lambda in grid {
        spec.at(lambda).validate()?;
    }

    let record = |lambda: f64, sol: &Solution| -> Result<PathRecord> {
        let k_alpha = k.apply(&sol.alpha)?;
        let fitted: Vec<f64> = k_alpha.iter().map(|v| v + sol.intercept).collect();
        let training_errors = error_count(&sign_labels(&fitted), y)?;
        let test_error = match test {
            Some((cross, yt)) => {
                let mut f = cross.matvec(&sol.alpha)?;
                f.iter_mut().for_each(|v| *v += sol.intercept);
                Some(error_count(&sign_labels(&f), yt)? as f64 / yt.len().max(1) as f64)
            }
            None => None,
        };
        Ok(PathRecord {
            lambda,
            training_errors,
            training_error: training_errors as f64 / y.len() as f64,
            test_error,
            objective_value: sol.objective,
            penalty: dot(&sol.alpha, &k_alpha),
            intercept: sol.intercept,
            support: sol.alpha.iter().filter(|a| **a != 0.0).count(),
            iterations: sol.report.iterations,
        })
    };
    let annotate = |lambda: f64| {
        move |e: Error| Error::AtLambda {
            lambda,
            source: Box::new(e),
        }
    };

    let records = match mode {
        PathMode::Warm => {
            let mut records = Vec::with_capacity(grid.len());
            let mut previous: Option<Solution> = None;
            for &lambda in grid {
                let sol = solve(&spec.at(lambda), k, y, previous.as_ref())
                    .map_err(annotate(lambda))?;
                records.push(record(lambda, &sol)?);
                previous = Some(sol);
            }
            records
        }
        PathMode::ColdParallel => grid
            .par_iter()
            .map(|&lambda| {
                let sol = solve(&spec.at(lambda), k, y, None).map_err(annotate(lambda))?;
                record(lambda, &sol)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(PathResult {
        lambda_grid: grid.to_vec(),
        records,
    })
}
