//! Eigenvalues of the radial Gram matrix on a two-class mixture sample,
//! for a range of kernel widths.
//!
//! cargo run --example kernel_spectrum -- [seed]

use kernreg::{
    eigendecompose, effective_rank, gram_matrix, sample_dataset, sample_mixture_model, KernelSpec,
};

fn main() -> kernreg::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let model = sample_mixture_model(seed);
    let data = sample_dataset(&model, 100, seed + 1)?;

    println!("n = {}, seed = {seed}", data.len());
    println!("{:>6} {:>6} {:>12} {:>12} {:>12} {:>12}", "gamma", "rank", "d_1", "d_10", "d_50", "d_n");
    for gamma in [0.1, 0.5, 1.0, 5.0, 25.0] {
        let k = gram_matrix(&KernelSpec::radial(gamma)?, &data.x)?;
        let eig = eigendecompose(&k)?;
        let d = eig.eigenvalues();
        println!(
            "{gamma:>6} {:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            effective_rank(&eig, 1e-12),
            d[0],
            d[9],
            d[49],
            d[d.len() - 1]
        );
    }

    // A quick sanity check on the decomposition itself.
    let k = gram_matrix(&KernelSpec::radial(1.0)?, &data.x)?;
    let eig = eigendecompose(&k)?;
    println!(
        "gamma=1: |K - U D Uᵀ|max = {:.2e}, |UᵀU - I|max = {:.2e}, trace = {:.6}",
        k.matrix().max_abs_diff(&eig.reconstruct()),
        eig.orthonormality_error(),
        eig.eigenvalues().iter().sum::<f64>()
    );
    Ok(())
}
