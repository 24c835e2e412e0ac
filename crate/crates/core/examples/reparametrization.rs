//! Fits the same criterion in kernel, eigen and feature coordinates and
//! compares fitted values and penalties.

use kernreg::{
    eigendecompose, fit, fit_reparam_with, gram_matrix, objective_reparam, sample_dataset,
    sample_mixture_model, FitSpec, KernelSpec, Loss, Parametrization, ReparamCoefficients,
};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn main() -> kernreg::Result<()> {
    let mixture = sample_mixture_model(21);
    let data = sample_dataset(&mixture, 15, 22)?;
    let kernel = KernelSpec::radial(0.5)?;
    let k = gram_matrix(&kernel, &data.x)?;
    let eig = eigendecompose(&k)?;

    for loss in Loss::ALL {
        let spec = FitSpec::new(loss, kernel, 0.1).with_tolerance(1e-10);
        let by_alpha = fit(&spec, &data.x, &data.y)?;
        let f_alpha: Vec<f64> = k.apply(&by_alpha.alpha)?.iter().map(|v| v + by_alpha.intercept).collect();

        let from_alpha = ReparamCoefficients::from_alpha(&eig, by_alpha.intercept, &by_alpha.alpha, 1e-12)?;
        let (_, eigen) = fit_reparam_with(&spec, &data.x, &data.y, Parametrization::Eigen, 1e-12)?;
        let (_, feature) = fit_reparam_with(&spec, &data.x, &data.y, Parametrization::Feature, 1e-12)?;
        let f_eigen: Vec<f64> = eigen.fitted(&eig)?.iter().map(|v| v + eigen.intercept).collect();
        let f_feature: Vec<f64> = feature.fitted(&eig)?.iter().map(|v| v + feature.intercept).collect();

        println!("{}", loss.name());
        println!("  |f_alpha - f_beta|  = {:.2e}", max_diff(&f_alpha, &f_eigen));
        println!("  |f_alpha - f_theta| = {:.2e}", max_diff(&f_alpha, &f_feature));
        println!(
            "  penalties: aᵀKa {:.8}  βᵀD⁻¹β {:.8}  θᵀθ {:.8}",
            by_alpha.penalty(&k)?,
            from_alpha.generalized_ridge_penalty(&eig),
            from_alpha.feature_ridge_penalty()
        );
        println!(
            "  objective: kernel {:.10}  eigen {:.10}",
            by_alpha.objective_value,
            objective_reparam(&data.y, &eig, eigen.intercept, &eigen.beta, spec.lambda, loss)?
        );
    }
    Ok(())
}
