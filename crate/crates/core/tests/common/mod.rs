#![allow(dead_code)]

use kernreg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points in `[-2, 2]^d`.
pub fn random_points(rng: &mut impl Rng, n: usize, d: usize) -> Matrix {
    let data = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

/// ±1 labels with both classes present.
pub fn random_labels(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut y: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    y[0] = 1.0;
    y[1] = -1.0;
    y
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

use kernreg::{eigendecompose, feature_matrix, gram_matrix, KernelSpec, Loss};

/// One random fitting problem.
pub struct Instance {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub kernel: KernelSpec,
    pub loss: Loss,
    pub lambda: f64,
}

/// Instance `i` of a reproducible family cycling through every loss and
/// every value of `lambdas`.
pub fn instance(i: usize, n_range: std::ops::RangeInclusive<usize>, lambdas: &[f64], seed: u64) -> Instance {
    let mut r = rng(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
    let n = r.random_range(n_range);
    let d = r.random_range(1..=3);
    let x = random_points(&mut r, n, d);
    let y = random_labels(&mut r, n);
    let gamma = 10f64.powf(r.random_range(-1.0..0.7));
    Instance {
        x,
        y,
        kernel: KernelSpec::radial(gamma).unwrap(),
        loss: Loss::ALL[i % 4],
        lambda: lambdas[(i / 4) % lambdas.len()],
    }
}

/// Minimum of the criterion over a grid in `(b, theta)`, where
/// `f = b + H theta` with `H` the feature matrix and penalty
/// `lambda thetaᵀtheta`. The box is zoomed around the best grid point
/// until its half-width drops below `1e-7`.
///
/// Only the loss values and the feature matrix are used, so this does not
/// share code with any solver.
pub fn brute_force_minimum(inst: &Instance) -> f64 {
    let k = gram_matrix(&inst.kernel, &inst.x).unwrap();
    let eig = eigendecompose(&k).unwrap();
    let h = feature_matrix(&eig).unwrap();
    let n = inst.y.len();
    let cols: Vec<usize> = (0..n).filter(|&j| eig.eigenvalues()[j] > 1e-12).collect();
    let dims = 1 + cols.len();

    let objective = |p: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let row = h.matrix().row(i);
            let f = p[0] + cols.iter().zip(&p[1..]).map(|(&j, t)| row[j] * t).sum::<f64>();
            total += kernreg::loss_value(inst.loss, inst.y[i], f).unwrap();
        }
        total + inst.lambda * p[1..].iter().map(|t| t * t).sum::<f64>()
    };

    // Any minimizer has lambda |theta|^2 <= objective at zero.
    let radius = (objective(&vec![0.0; dims]) / inst.lambda).sqrt().max(1.0);
    let mut center = vec![0.0; dims];
    let mut width: Vec<f64> = std::iter::once(radius + 3.0).chain(std::iter::repeat_n(radius, dims - 1)).collect();
    let points = 9usize;
    let mut best = objective(&center);
    let mut idx = vec![0usize; dims];
    let mut p = vec![0.0; dims];
    while width.iter().cloned().fold(0.0, f64::max) > 1e-7 {
        let mut best_p = center.clone();
        idx.iter_mut().for_each(|v| *v = 0);
        'grid: loop {
            for k in 0..dims {
                p[k] = center[k] + width[k] * (2.0 * idx[k] as f64 / (points - 1) as f64 - 1.0);
            }
            let v = objective(&p);
            if v < best {
                best = v;
                best_p.copy_from_slice(&p);
            }
            for k in 0..dims {
                idx[k] += 1;
                if idx[k] < points {
                    continue 'grid;
                }
                idx[k] = 0;
            }
            break;
        }
        center = best_p;
        width.iter_mut().for_each(|w| *w *= 0.6);
    }
    best
}
