mod common;

use common::{brute_force_minimum, instance, max_abs_diff, random_labels, random_points, rel_diff, rng};
use kernreg::{
    eigendecompose, fit, fit_reparam_with, gram_matrix, kkt_residual, lambda_path, log_grid,
    loss_gradient, objective_alpha, objective_reparam, predict, Error, FitSpec, KernelSpec, Loss,
    Matrix, Model, Parametrization, PathMode, PathSpec, ReparamCoefficients,
};
use nalgebra::{DMatrix, DVector};

fn spec_for(inst: &common::Instance) -> FitSpec {
    FitSpec::new(inst.loss, inst.kernel, inst.lambda)
        .with_tolerance(1e-12)
        .with_max_iterations(1_000_000)
}

#[test]
fn squared_loss_matches_bordered_linear_system() {
    // Stationarity of sum (y - b - K a)^2 + lambda aᵀ K a on the range of K:
    // (K + lambda I) a + b 1 = y, 1ᵀ a = 0.
    let mut r = rng(31);
    for (n, gamma, lambda) in [(8, 1.0, 0.5), (20, 0.3, 0.01), (30, 4.0, 3.0)] {
        let x = random_points(&mut r, n, 2);
        let y = random_labels(&mut r, n);
        let kernel = KernelSpec::radial(gamma).unwrap();
        let k = gram_matrix(&kernel, &x).unwrap();

        let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = k.get(i, j);
            }
            a[(i, i)] += lambda;
            a[(i, n)] = 1.0;
            a[(n, i)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from_slice(&y);
        let sol = a.lu().solve(&rhs).unwrap();

        let model = fit(&FitSpec::new(Loss::Squared, kernel, lambda), &x, &y).unwrap();
        let ours: Vec<f64> = k.apply(&model.alpha).unwrap().iter().map(|v| v + model.intercept).collect();
        let k_na = DMatrix::from_row_slice(n, n, k.matrix().as_slice());
        let theirs = &k_na * sol.rows(0, n) + DVector::repeat(n, sol[n]);
        assert!(max_abs_diff(&ours, theirs.as_slice()) < 1e-9, "n={n}");
        assert!((model.intercept - sol[n]).abs() < 1e-9);
    }
}

#[test]
fn three_parametrizations_agree() {
    for i in 0..48 {
        let inst = instance(i, 4..=30, &[0.01, 1.0, 100.0], 7);
        let spec = spec_for(&inst);
        let k = gram_matrix(&inst.kernel, &inst.x).unwrap();
        let eig = eigendecompose(&k).unwrap();

        let by_alpha = fit(&spec, &inst.x, &inst.y).unwrap();
        let f_alpha: Vec<f64> = k.apply(&by_alpha.alpha).unwrap().iter().map(|v| v + by_alpha.intercept).collect();
        for form in [Parametrization::Eigen, Parametrization::Feature] {
            let (_, coef) = fit_reparam_with(&spec, &inst.x, &inst.y, form, 1e-12).unwrap();
            let f: Vec<f64> = coef.fitted(&eig).unwrap().iter().map(|v| v + coef.intercept).collect();
            assert!(max_abs_diff(&f_alpha, &f) <= 1e-6, "instance {i} {form:?} {}", inst.loss);
        }

        let coef = ReparamCoefficients::from_alpha(&eig, by_alpha.intercept, &by_alpha.alpha, 1e-12).unwrap();
        let kernel_pen = by_alpha.penalty(&k).unwrap();
        assert!(rel_diff(kernel_pen, coef.generalized_ridge_penalty(&eig)) <= 1e-8, "instance {i}");
        assert!(rel_diff(kernel_pen, coef.feature_ridge_penalty()) <= 1e-8, "instance {i}");
        let obj = objective_reparam(&inst.y, &eig, coef.intercept, &coef.beta, inst.lambda, inst.loss).unwrap();
        assert!(rel_diff(obj, by_alpha.objective_value) <= 1e-8);
    }
}

#[test]
fn fits_reach_the_grid_minimum() {
    for i in 0..12 {
        let inst = instance(i, 2..=4, &[0.1, 1.0, 10.0], 99);
        let k = gram_matrix(&inst.kernel, &inst.x).unwrap();
        let model = fit(&spec_for(&inst), &inst.x, &inst.y).unwrap();
        let grid = brute_force_minimum(&inst);
        assert!(model.objective_value <= grid + 1e-3, "instance {i}: {} vs {grid}", model.objective_value);
        if inst.loss == Loss::Hinge {
            assert!(kkt_residual(&model, &inst.y, &k, inst.lambda).unwrap() <= 1e-6);
        }
    }
}

#[test]
fn newton_iterates_decrease_the_objective() {
    for i in 0..24 {
        let mut inst = instance(i, 10..=30, &[0.01, 1.0], 5);
        if inst.loss == Loss::Hinge {
            inst.loss = Loss::BinomialDeviance;
        }
        let model = fit(&spec_for(&inst), &inst.x, &inst.y).unwrap();
        let h = &model.solver_report.objective_history;
        if inst.loss != Loss::Squared {
            assert!(h.len() >= 2);
        }
        assert!(h.windows(2).all(|w| w[1] < w[0] + 1e-12 * w[0].abs()), "instance {i}: {h:?}");
    }
}

#[test]
fn objective_gradient_matches_finite_differences() {
    let mut r = rng(17);
    for loss in [Loss::BinomialDeviance, Loss::Exponential, Loss::Squared] {
        let n = 12;
        let x = random_points(&mut r, n, 2);
        let y = random_labels(&mut r, n);
        let k = gram_matrix(&KernelSpec::radial(0.7).unwrap(), &x).unwrap();
        let lambda = 0.3;
        let alpha: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let b = 0.2;

        let ka = k.apply(&alpha).unwrap();
        let g: Vec<f64> = (0..n).map(|i| loss_gradient(loss, y[i], b + ka[i]).unwrap()).collect();
        let inner: Vec<f64> = (0..n).map(|i| g[i] + 2.0 * lambda * alpha[i]).collect();
        let analytic = k.apply(&inner).unwrap();
        let obj = |a: &[f64], b: f64| objective_alpha(&y, &k, b, a, lambda, loss).unwrap();
        let h = 1e-6;
        for j in 0..n {
            let mut up = alpha.clone();
            let mut dn = alpha.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (obj(&up, b) - obj(&dn, b)) / (2.0 * h);
            assert!((fd - analytic[j]).abs() <= 1e-5 * analytic[j].abs().max(1.0), "{loss} j={j}");
        }
        let fd_b = (obj(&alpha, b + h) - obj(&alpha, b - h)) / (2.0 * h);
        let db: f64 = g.iter().sum();
        assert!((fd_b - db).abs() <= 1e-5 * db.abs().max(1.0));
    }
}

#[test]
fn penalty_grows_as_lambda_shrinks() {
    let mut r = rng(23);
    let x = random_points(&mut r, 40, 2);
    let y = random_labels(&mut r, 40);
    let grid = log_grid(100.0, 1e-3, 20).unwrap();
    for loss in Loss::ALL {
        let mut spec = PathSpec::new(loss, KernelSpec::radial(1.0).unwrap());
        spec.tolerance = 1e-10;
        spec.max_iterations = 1_000_000;
        let path = lambda_path(&spec, &x, &y, &grid, None, PathMode::Warm).unwrap();
        for w in path.records.windows(2) {
            assert!(w[1].penalty >= w[0].penalty * (1.0 - 1e-6) - 1e-9, "{loss}: {} then {}", w[0].penalty, w[1].penalty);
        }
    }
}

#[test]
fn warm_and_cold_paths_agree() {
    let mut r = rng(29);
    let x = random_points(&mut r, 30, 2);
    let y = random_labels(&mut r, 30);
    let grid = log_grid(10.0, 1e-3, 12).unwrap();
    for loss in Loss::ALL {
        let mut spec = PathSpec::new(loss, KernelSpec::radial(2.0).unwrap());
        spec.tolerance = 1e-10;
        spec.max_iterations = 1_000_000;
        let warm = lambda_path(&spec, &x, &y, &grid, None, PathMode::Warm).unwrap();
        let cold = lambda_path(&spec, &x, &y, &grid, None, PathMode::ColdParallel).unwrap();
        for (a, b) in warm.records.iter().zip(&cold.records) {
            assert!(rel_diff(a.objective_value, b.objective_value) <= 1e-7, "{loss} at {}", a.lambda);
        }
    }
}

#[test]
fn heavy_regularization_limit() {
    let mut r = rng(41);
    let x = random_points(&mut r, 30, 2);
    let mut y = random_labels(&mut r, 30);
    y[2..20].iter_mut().for_each(|v| *v = 1.0);
    let n_pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let n_neg = 30.0 - n_pos;
    for loss in Loss::ALL {
        let spec = FitSpec::new(loss, KernelSpec::radial(1.0).unwrap(), 1e6).with_max_iterations(1_000_000);
        let model = fit(&spec, &x, &y).unwrap();
        assert!(model.alpha.iter().all(|a| a.abs() <= 1e-3), "{loss}");
        if loss == Loss::BinomialDeviance {
            assert!((model.intercept - (n_pos / n_neg).ln()).abs() <= 1e-2);
        }
    }
}

#[test]
fn hinge_solutions_satisfy_kkt() {
    for i in 0..20 {
        let mut inst = instance(i, 10..=40, &[1e-4, 0.01, 1.0, 100.0], 61);
        inst.loss = Loss::Hinge;
        let spec = FitSpec::new(Loss::Hinge, inst.kernel, inst.lambda)
            .with_tolerance(1e-8)
            .with_max_iterations(10_000_000);
        let k = gram_matrix(&inst.kernel, &inst.x).unwrap();
        let model = fit(&spec, &inst.x, &inst.y).unwrap();
        assert!(model.solver_report.converged);
        assert!(kkt_residual(&model, &inst.y, &k, inst.lambda).unwrap() <= 1e-6, "instance {i}");
        assert!(model.alpha.iter().sum::<f64>().abs() < 1e-8);
        let c = 1.0 / (2.0 * inst.lambda);
        for (a, yi) in model.alpha.iter().zip(&inst.y) {
            let dual = a * yi;
            assert!((-1e-12..=c * (1.0 + 1e-12)).contains(&dual));
        }
    }
}

#[test]
fn model_json_round_trip() {
    let inst = instance(1, 15..=15, &[0.1], 3);
    let model = fit(&spec_for(&inst), &inst.x, &inst.y).unwrap();
    let text = model.to_json().unwrap();
    let back = Model::from_json(&text).unwrap();
    let probe = random_points(&mut rng(4), 10, inst.x.cols());
    assert_eq!(predict(&model, &probe).unwrap(), predict(&back, &probe).unwrap());
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["intercept", "alpha", "kernel", "lambda", "objective", "n", "d"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn invalid_problems_are_rejected() {
    let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
    let kernel = KernelSpec::radial(1.0).unwrap();
    let spec = FitSpec::new(Loss::Hinge, kernel, 1.0);
    assert!(matches!(fit(&spec, &x, &[1.0, 1.0, 1.0]), Err(Error::DegenerateFit(_))));
    assert!(matches!(fit(&spec, &x, &[1.0, -1.0]), Err(Error::Input(_))));
    assert!(matches!(fit(&spec, &x, &[1.0, -1.0, 0.5]), Err(Error::Input(_))));
    let bad = FitSpec::new(Loss::Hinge, kernel, -1.0);
    assert!(matches!(fit(&bad, &x, &[1.0, -1.0, 1.0]), Err(Error::Input(_))));
    assert!(log_grid(1.0, 2.0, 5).is_err());
}

#[test]
fn tight_budget_reports_non_convergence() {
    let inst = instance(2, 30..=30, &[1e-3], 8);
    let spec = FitSpec::new(Loss::BinomialDeviance, inst.kernel, 1e-3).with_max_iterations(1);
    let err = fit(&spec, &inst.x, &inst.y).unwrap_err();
    assert!(matches!(err, Error::NonConvergence { .. }));
    assert_eq!(err.exit_code(), 3);
}
