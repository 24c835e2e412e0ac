//! Leading eigenvectors of the Gram matrix on a 1-D standard normal sample
//! and the matching feature columns `h_j = sqrt(d_j) u_j`.
//!
//! Prints a coarse table sorted by x; the oscillation count of each column
//! grows with its index.

use kernreg::mixture::sample_standard_normal_1d;
use kernreg::{eigendecompose, feature_matrix, gram_matrix, KernelSpec};

fn sign_changes(v: &[f64]) -> usize {
    v.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

fn main() -> kernreg::Result<()> {
    let data = sample_standard_normal_1d(100, 7)?;
    let k = gram_matrix(&KernelSpec::radial(1.0)?, &data.x)?;
    let eig = eigendecompose(&k)?;
    let h = feature_matrix(&eig)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data.x[(a, 0)].total_cmp(&data.x[(b, 0)]));

    println!("{:>3} {:>12} {:>10} {:>13}", "j", "d_j", "|h_j|", "sign changes");
    for j in 0..8 {
        let u: Vec<f64> = order.iter().map(|&i| eig.eigenvectors()[(i, j)]).collect();
        println!(
            "{:>3} {:>12.4e} {:>10.4} {:>13}",
            j + 1,
            eig.eigenvalues()[j],
            h.column_norm(j),
            sign_changes(&u)
        );
    }

    println!("\n{:>8} {:>9} {:>9} {:>9}", "x", "h_1", "h_2", "h_3");
    for &i in order.iter().step_by(10) {
        let row = h.matrix().row(i);
        println!("{:>8.3} {:>9.4} {:>9.4} {:>9.4}", data.x[(i, 0)], row[0], row[1], row[2]);
    }
    println!("\n|H Hᵀ - K|max = {:.2e}", h.gram().max_abs_diff(k.matrix()));
    Ok(())
}
