//! Regularized kernel function estimation.
//!
//! Fits `f(x) = b + sum_i alpha_i K(x, x_i)` by minimizing
//! `sum_i L(y_i, f(x_i)) + lambda alphaᵀ K alpha` for hinge, binomial
//! deviance, exponential and squared loss, either directly in the expansion
//! coefficients or in the eigenbasis of the Gram matrix. Around the solvers
//! sit Gram-spectrum diagnostics, a two-class Gaussian mixture generator
//! with an exact Bayes rule, and the experiment drivers behind the
//! `kernreg` binary.
//!
//! Runnable entry points live in `examples/`:
//!
//! | example | shows |
//! |---|---|
//! | `kernel_spectrum` | Gram eigenvalues and effective rank across `gamma` |
//! | `eigen_features` | eigenvectors and features `H = U D^{1/2}` on 1-D data |
//! | `loss_comparison` | loss values and population minimizers |
//! | `svm_fit` | hinge-loss fit, KKT residual, prediction |
//! | `logistic_fit` | penalized kernel logistic regression |
//! | `reparametrization` | the same fit in expansion, eigen and feature coordinates |
//! | `regularization_path` | warm-started sweep over `lambda` with test error |
//! | `effective_dimension` | effective rank and minimal training error per `gamma` |
//! | `bayes_error` | mixture sampling and the Monte Carlo Bayes error |

pub mod dataset;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod kernel;
pub mod linalg;
pub mod loss;
pub mod mixture;

pub use dataset::{load_dataset, save_dataset, Dataset, DatasetFormat, Provenance};
pub use error::{Error, Result};
pub use estimator::{
    classify, error_rate, fit, fit_reparam, fit_reparam_with, kkt_residual, lambda_path, log_grid,
    objective_alpha, objective_reparam, predict, FitSpec, Model, Parametrization, PathMode,
    PathRecord, PathResult, PathSpec, ReparamCoefficients, SolverReport,
};
pub use kernel::{
    cross_gram, effective_rank, eigendecompose, feature_matrix, gram_matrix, kernel_eval,
    EigenDecomposition, FeatureMatrix, KernelMatrix, KernelSpec,
};
pub use linalg::Matrix;
pub use loss::{
    loss_curvature, loss_gradient, loss_value, population_minimizer, population_minimizer_numeric,
    population_risk, Loss,
};
pub use mixture::{
    bayes_error, bayes_posterior, sample_dataset, sample_mixture_model, ErrorEstimate,
    MixtureModel,
};
