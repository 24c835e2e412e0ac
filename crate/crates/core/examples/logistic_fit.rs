//! Kernel logistic regression (binomial deviance) by damped Newton, with
//! the per-iteration objective trace and a JSON round trip of the model.

use kernreg::{classify, error_rate, fit, sample_dataset, sample_mixture_model, FitSpec, KernelSpec, Loss, Model};

fn main() -> kernreg::Result<()> {
    let mixture = sample_mixture_model(11);
    let train = sample_dataset(&mixture, 100, 12)?;
    let test = sample_dataset(&mixture, 1000, 13)?;

    let spec = FitSpec::new(Loss::BinomialDeviance, KernelSpec::radial(1.0)?, 0.05);
    let model = fit(&spec, &train.x, &train.y)?;
    println!("newton iterations: {}", model.solver_report.iterations);
    for (i, v) in model.solver_report.objective_history.iter().enumerate() {
        println!("  {i:>2}  {v:.12}");
    }
    println!(
        "train error {:.3}, test error {:.4}",
        error_rate(&classify(&model, &train.x)?, &train.y)?,
        error_rate(&classify(&model, &test.x)?, &test.y)?
    );

    let restored = Model::from_json(&model.to_json()?)?;
    let a = model.predict(&test.x)?;
    let b = restored.predict(&test.x)?;
    let drift = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    println!("prediction drift after JSON round trip: {drift:e}");
    Ok(())
}
