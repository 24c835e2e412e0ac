//! Effective rank of the Gram matrix against the smallest training error
//! the hinge path reaches, per kernel width. Wider kernels (small gamma)
//! leave fewer usable directions and cannot interpolate.

use kernreg::{
    eigendecompose, effective_rank, gram_matrix, lambda_path, log_grid, sample_dataset,
    sample_mixture_model, KernelSpec, Loss, PathMode, PathSpec,
};

fn main() -> kernreg::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let mixture = sample_mixture_model(seed);
    let train = sample_dataset(&mixture, 100, seed + 100)?;
    let grid = log_grid(100.0, 1e-4, 30)?;

    println!("{:>6} {:>6} {:>11} {:>12}", "gamma", "rank", "min errors", "at lambda");
    for gamma in [0.1, 0.5, 1.0, 5.0] {
        let kernel = KernelSpec::radial(gamma)?;
        let eig = eigendecompose(&gram_matrix(&kernel, &train.x)?)?;
        let mut spec = PathSpec::new(Loss::Hinge, kernel);
        spec.tolerance = 1e-6;
        spec.max_iterations = 10_000_000;
        let path = lambda_path(&spec, &train.x, &train.y, &grid, None, PathMode::Warm)?;
        let best = path.min_training_errors().expect("non-empty grid");
        println!(
            "{gamma:>6} {:>6} {:>11} {:>12.3e}",
            effective_rank(&eig, 1e-12),
            best.training_errors,
            best.lambda
        );
    }
    Ok(())
}
