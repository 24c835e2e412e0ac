//! Monte Carlo estimate of the Bayes error of a sampled mixture, and how
//! the standard error shrinks with the number of draws.

use kernreg::{bayes_error, bayes_posterior, sample_mixture_model};

fn main() -> kernreg::Result<()> {
    let model = sample_mixture_model(42);
    println!("component sd {}", model.component_sd);
    for (label, means) in [("+1", &model.means_pos), ("-1", &model.means_neg)] {
        let shown: Vec<String> = means.iter().map(|m| format!("({:.2}, {:.2})", m[0], m[1])).collect();
        println!("class {label}: {}", shown.join(" "));
    }

    for x in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
        println!("P(Y=1 | x={x:?}) = {:.4}", bayes_posterior(&model, x));
    }

    println!("\n{:>9} {:>9} {:>9}", "draws", "error", "std err");
    for n in [1_000, 10_000, 100_000, 1_000_000] {
        let e = bayes_error(&model, n, 7)?;
        println!("{n:>9} {:>9.5} {:>9.5}", e.estimate, e.std_error);
    }
    Ok(())
}
