//! Kernels, data kernel (Gram) matrices and their spectra.
//!
//! The Gram matrix `K` of the training inputs is decomposed as `K = U D Uᵀ`.
//! Columns of `U` are the empirical eigenvectors, the diagonal of `D` the
//! empirical eigenvalues, and `H = U D^{1/2}` is the empirical feature
//! matrix whose rows reproduce `K` through `H Hᵀ = K`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, squared_distance, Matrix};

/// Default absolute threshold used to count "non-zero" eigenvalues.
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-12;

/// Eigenvalues below this are treated as a failed decomposition rather than
/// rounding noise around zero.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = -1e-8;

/// A positive-definite kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-gamma * |x - x'|^2)`.
    Radial { gamma: f64 },
    /// `<x, x'>`. Used to build Gram matrices of known rank.
    Linear,
}

impl KernelSpec {
    pub fn radial(gamma: f64) -> Result<Self> {
        let spec = KernelSpec::Radial { gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Radial { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                Error::input(format!("radial kernel needs gamma > 0, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            KernelSpec::Radial { gamma } => Some(gamma),
            KernelSpec::Linear => None,
        }
    }

    /// Kernel value without dimension checks.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Radial { gamma } => (-gamma * squared_distance(x, y)).exp(),
            KernelSpec::Linear => dot(x, y),
        }
    }

    /// Evaluates `K(x, x')`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::input(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::input("kernel arguments must have dimension >= 1"));
        }
        Ok(self.eval_unchecked(x, y))
    }
}

/// Free-function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Symmetric `n x n` data kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix(Matrix);

impl KernelMatrix {
    /// Wraps a square matrix, symmetrizing it as `(K + Kᵀ) / 2`.
    pub fn from_matrix(mut m: Matrix) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::input(format!(
                "kernel matrix must be square and non-empty, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        m.symmetrize();
        Ok(KernelMatrix(m))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// `K v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.0.matvec(v)
    }
}

fn check_inputs(x: &Matrix) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::input("input matrix has no rows"));
    }
    if x.cols() == 0 {
        return Err(Error::input("input matrix has no columns"));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::input("input matrix has non-finite entries"));
    }
    Ok(())
}

/// Gram matrix of the rows of `x`.
///
/// Rows are filled by a parallel map over row indices; every entry is
/// computed the same way regardless of thread count, so the result does not
/// depend on the degree of parallelism.
pub fn gram_matrix(spec: &KernelSpec, x: &Matrix) -> Result<KernelMatrix> {
    spec.validate()?;
    check_inputs(x)?;
    let n = x.rows();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = x.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = spec.eval_unchecked(xi, x.row(j));
        }
    });
    KernelMatrix::from_matrix(Matrix::from_vec(n, n, data)?)
}

/// Cross kernel matrix with entries `K(xstar_i, x_j)`.
pub fn cross_gram(spec: &KernelSpec, xstar: &Matrix, x: &Matrix) -> Result<Matrix> {
    spec.validate()?;
    check_inputs(x)?;
    if xstar.rows() > 0 && xstar.cols() != x.cols() {
        return Err(Error::input(format!(
            "points have dimension {}, training inputs {}",
            xstar.cols(),
            x.cols()
        )));
    }
    let (m, n) = (xstar.rows(), x.rows());
    let mut data = vec![0.0; m * n];
    if n > 0 {
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let xi = xstar.row(i);
            for (j, out) in row.iter_mut().enumerate() {
                *out = spec.eval_unchecked(xi, x.row(j));
            }
        });
    }
    Matrix::from_vec(m, n, data)
}

/// `K = U diag(d) Uᵀ` with `d` descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j)
    }

    /// `U diag(d) Uᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.n();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            let ui = self.eigenvectors.row(i);
            for j in i..n {
                let uj = self.eigenvectors.row(j);
                let v: f64 = ui
                    .iter()
                    .zip(uj)
                    .zip(&self.eigenvalues)
                    .map(|((a, b), d)| a * d * b)
                    .sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Largest entry of `|UᵀU - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let u = &self.eigenvectors;
        let utu = u.transpose().matmul(u).expect("square");
        utu.max_abs_diff(&Matrix::identity(self.n()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Indices of eigenvalues strictly above `threshold`.
    pub fn retained(&self, threshold: f64) -> Vec<usize> {
        (0..self.n())
            .filter(|&j| self.eigenvalues[j] > threshold)
            .collect()
    }
}

/// Eigendecomposition of a data kernel matrix via Householder reduction and
/// implicit-shift QL; eigenvector signs are fixed so that the first entry
/// with magnitude above `1e-12` is positive.
pub fn eigendecompose(k: &KernelMatrix) -> Result<EigenDecomposition> {
    let eig = linalg::symmetric_eigen(k.matrix())?;
    Ok(EigenDecomposition {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
    })
}

/// Number of eigenvalues strictly greater than `threshold`.
pub fn effective_rank(eig: &EigenDecomposition, threshold: f64) -> usize {
    eig.eigenvalues.iter().filter(|&&d| d > threshold).count()
}

/// Empirical feature matrix `H = U D^{1/2}`.
#[derive(Debug, Clone)]
pub struct FeatureMatrix(Matrix);

impl FeatureMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j)
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.0.iter_rows().map(|r| r[j] * r[j]).sum::<f64>().sqrt()
    }

    /// `H Hᵀ`.
    pub fn gram(&self) -> Matrix {
        self.0.matmul(&self.0.transpose()).expect("square")
    }
}

/// Builds `H = U D^{1/2}`, clamping eigenvalues in `(-1e-8, 0)` to zero.
///
/// An eigenvalue below `-1e-8` means the matrix is not a usable kernel
/// matrix and is reported as [`Error::Numeric`].
pub fn feature_matrix(eig: &EigenDecomposition) -> Result<FeatureMatrix> {
    let min = eig.min_eigenvalue();
    if min < NEGATIVE_EIGENVALUE_TOLERANCE {
        return Err(Error::Numeric {
            message: "kernel matrix has a materially negative eigenvalue".into(),
            residual: min,
        });
    }
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|d| d.max(0.0).sqrt()).collect();
    let mut h = eig.eigenvectors.clone();
    let n = eig.n();
    for i in 0..n {
        for (x, r) in h.row_mut(i).iter_mut().zip(&roots) {
            *x *= r;
        }
    }
    Ok(FeatureMatrix(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_values() {
        let k = KernelSpec::radial(1.0).unwrap();
        assert_eq!(k.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);
        let v = k.eval(&[0.0], &[1.0]).unwrap();
        assert!((v - 0.367_879_441_171_442_3).abs() < 1e-15);
        let k = KernelSpec::radial(0.5).unwrap();
        let v = k.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn linear_value() {
        assert_eq!(KernelSpec::Linear.eval(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
    }

    #[test]
    fn bad_gamma_and_dimension_mismatch() {
        assert!(KernelSpec::radial(0.0).is_err());
        assert!(KernelSpec::radial(-2.0).is_err());
        assert!(KernelSpec::radial(f64::NAN).is_err());
        let k = KernelSpec::radial(1.0).unwrap();
        assert!(matches!(k.eval(&[1.0], &[1.0, 2.0]), Err(Error::Input(_))));
    }

    #[test]
    fn gram_examples() {
        let k = KernelSpec::radial(1.0).unwrap();
        let g = gram_matrix(&k, &Matrix::from_rows(&[[2.5]]).unwrap()).unwrap();
        assert_eq!(g.matrix().as_slice(), &[1.0]);

        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let g = gram_matrix(&k, &x).unwrap();
        assert_eq!(g.get(0, 2), (-4.0f64).exp());

        let x = Matrix::from_rows(&[[0.1, 0.2], [0.1, 0.2], [1.0, 0.0]]).unwrap();
        let g = gram_matrix(&k, &x).unwrap();
        assert_eq!(g.get(0, 1), 1.0);
        assert_eq!(g.matrix().row(0), g.matrix().row(1));
    }

    #[test]
    fn empty_inputs_rejected() {
        let k = KernelSpec::radial(1.0).unwrap();
        assert!(gram_matrix(&k, &Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn effective_rank_counts_strictly_above() {
        let eig = EigenDecomposition {
            eigenvalues: vec![1.0, 1e-12, 1e-13],
            eigenvectors: Matrix::identity(3),
        };
        assert_eq!(effective_rank(&eig, 1e-12), 1);
    }

    #[test]
    fn identity_features_are_eigenvectors() {
        let k = KernelMatrix::from_matrix(Matrix::identity(3)).unwrap();
        let eig = eigendecompose(&k).unwrap();
        assert_eq!(eig.eigenvalues(), &[1.0, 1.0, 1.0]);
        let h = feature_matrix(&eig).unwrap();
        for j in 0..3 {
            assert!((h.column_norm(j) - 1.0).abs() < 1e-15);
        }
        assert_eq!(h.matrix(), eig.eigenvectors());
    }

    #[test]
    fn strongly_negative_spectrum_rejected() {
        let k = KernelMatrix::from_matrix(Matrix::from_diagonal(&[1.0, -1e-3])).unwrap();
        let eig = eigendecompose(&k).unwrap();
        assert!(matches!(feature_matrix(&eig), Err(Error::Numeric { .. })));
        let k = KernelMatrix::from_matrix(Matrix::from_diagonal(&[1.0, -1e-10])).unwrap();
        let h = feature_matrix(&eigendecompose(&k).unwrap()).unwrap();
        assert_eq!(h.column_norm(1), 0.0);
    }
}
