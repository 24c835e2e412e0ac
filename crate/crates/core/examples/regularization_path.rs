//! Hinge-loss path over a descending lambda grid, warm-started, with
//! training and test error at every step.

use std::time::Instant;

use kernreg::{lambda_path, log_grid, sample_dataset, sample_mixture_model, KernelSpec, Loss, PathMode, PathSpec};

fn main() -> kernreg::Result<()> {
    let mixture = sample_mixture_model(1);
    let train = sample_dataset(&mixture, 100, 2)?;
    let test = sample_dataset(&mixture, 1000, 3)?;
    let grid = log_grid(100.0, 1e-4, 25)?;

    for gamma in [0.1, 5.0] {
        let mut spec = PathSpec::new(Loss::Hinge, KernelSpec::radial(gamma)?);
        spec.tolerance = 1e-6;
        spec.max_iterations = 10_000_000;
        let start = Instant::now();
        let path = lambda_path(&spec, &train.x, &train.y, &grid, Some((&test.x, &test.y)), PathMode::Warm)?;
        println!("gamma = {gamma} ({:.2?})", start.elapsed());
        println!("{:>10} {:>6} {:>8} {:>8} {:>9}", "lambda", "train", "test", "support", "updates");
        for r in &path.records {
            println!(
                "{:>10.3e} {:>6} {:>8.4} {:>8} {:>9}",
                r.lambda,
                r.training_errors,
                r.test_error.unwrap_or(f64::NAN),
                r.support,
                r.iterations
            );
        }
        if let Some(i) = path.argmin_test_error() {
            println!("best test error at lambda = {:.3e}\n", path.records[i].lambda);
        }
    }
    Ok(())
}
