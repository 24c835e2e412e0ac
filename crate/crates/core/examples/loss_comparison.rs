//! Loss values on a margin grid, plus the population minimizer of each
//! loss as a function of P(Y = 1 | x).

use kernreg::{population_minimizer, population_minimizer_numeric, Loss};

fn main() -> kernreg::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>12} {:>10}", "yf", "hinge", "deviance", "exponential", "squared");
    for i in -6..=6 {
        let m = i as f64 * 0.5;
        print!("{m:>6.1}");
        for loss in Loss::ALL {
            print!(" {:>10.4}", loss.of_margin(m));
        }
        println!();
    }

    println!("\npopulation minimizers (closed form / numeric)");
    println!("{:>5} {:>18} {:>18} {:>18} {:>18}", "p", "hinge", "deviance", "exponential", "squared");
    for p in [0.05, 0.2, 0.4, 0.5, 0.6, 0.8, 0.95] {
        print!("{p:>5}");
        for loss in Loss::ALL {
            let exact = population_minimizer(loss, p)?;
            let numeric = population_minimizer_numeric(loss, p)?;
            print!(" {:>8.4}/{:<9.4}", exact, numeric);
        }
        println!();
    }
    Ok(())
}
