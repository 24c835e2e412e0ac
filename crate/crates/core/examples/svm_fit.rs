//! Hinge-loss fit on a mixture sample: training and test error, support
//! size and the KKT residual of the returned solution.

use kernreg::{
    classify, error_rate, fit, gram_matrix, kkt_residual, sample_dataset, sample_mixture_model,
    FitSpec, KernelSpec, Loss,
};

fn main() -> kernreg::Result<()> {
    let model = sample_mixture_model(3);
    let train = sample_dataset(&model, 100, 4)?;
    let test = sample_dataset(&model, 1000, 5)?;

    for lambda in [10.0, 1.0, 0.1, 0.01, 0.001] {
        let spec = FitSpec::new(Loss::Hinge, KernelSpec::radial(1.0)?, lambda)
            .with_tolerance(1e-8)
            .with_max_iterations(10_000_000);
        let fitted = fit(&spec, &train.x, &train.y)?;
        let k = gram_matrix(&spec.kernel, &train.x)?;
        let support = fitted.alpha.iter().filter(|a| a.abs() > 1e-12).count();
        println!(
            "lambda {lambda:>6}: train {:.3}  test {:.4}  support {support:>3}  b {:+.4}  kkt {:.1e}  pair updates {}",
            error_rate(&classify(&fitted, &train.x)?, &train.y)?,
            error_rate(&classify(&fitted, &test.x)?, &test.y)?,
            fitted.intercept,
            kkt_residual(&fitted, &train.y, &k, lambda)?,
            fitted.solver_report.iterations
        );
    }
    Ok(())
}
