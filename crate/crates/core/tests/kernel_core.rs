mod common;

use common::{random_points, rng};
use kernreg::{
    cross_gram, eigendecompose, effective_rank, feature_matrix, gram_matrix, kernel_eval,
    sample_dataset, sample_mixture_model, Error, KernelMatrix, KernelSpec, Matrix,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn radial_gram(n: usize, d: usize, gamma: f64, seed: u64) -> KernelMatrix {
    let x = random_points(&mut rng(seed), n, d);
    gram_matrix(&KernelSpec::radial(gamma).unwrap(), &x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_identities(n in 1usize..60, d in 1usize..4, gamma in 0.01f64..20.0, seed in any::<u64>()) {
        let k = radial_gram(n, d, gamma, seed);
        let eig = eigendecompose(&k).unwrap();
        prop_assert!(k.matrix().max_abs_diff(&eig.reconstruct()) <= 1e-8 * k.matrix().max_abs());
        prop_assert!(eig.orthonormality_error() <= 1e-10);
        let trace: f64 = eig.eigenvalues().iter().sum();
        prop_assert!((trace - n as f64).abs() <= 1e-8 * n as f64);
        prop_assert!(eig.min_eigenvalue() >= -1e-8);
        prop_assert!(eig.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigenvector_signs_are_fixed(n in 2usize..30, gamma in 0.1f64..5.0, seed in any::<u64>()) {
        let eig = eigendecompose(&radial_gram(n, 2, gamma, seed)).unwrap();
        for j in 0..n {
            let u = eig.eigenvector(j);
            let first = u.iter().find(|v| v.abs() > 1e-12).unwrap();
            prop_assert!(*first > 0.0);
        }
    }

    #[test]
    fn features_reproduce_the_gram_matrix(n in 1usize..40, gamma in 0.05f64..10.0, seed in any::<u64>()) {
        let k = radial_gram(n, 2, gamma, seed);
        let h = feature_matrix(&eigendecompose(&k).unwrap()).unwrap();
        prop_assert!(h.gram().max_abs_diff(k.matrix()) <= 1e-8);
    }

    #[test]
    fn kernel_is_symmetric_and_bounded(a in prop::collection::vec(-5.0f64..5.0, 3), b in prop::collection::vec(-5.0f64..5.0, 3), gamma in 0.01f64..10.0) {
        let spec = KernelSpec::radial(gamma).unwrap();
        let kab = kernel_eval(&spec, &a, &b).unwrap();
        prop_assert_eq!(kab, kernel_eval(&spec, &b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&kab));
        prop_assert_eq!(kernel_eval(&spec, &a, &a).unwrap(), 1.0);
    }
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut r = rng(5);
    for (n, gamma) in [(5, 1.0), (17, 0.3), (40, 2.0), (80, 0.5)] {
        let x = random_points(&mut r, n, 2);
        let k = gram_matrix(&KernelSpec::radial(gamma).unwrap(), &x).unwrap();
        let ours = eigendecompose(&k).unwrap();
        let m = DMatrix::from_row_slice(n, n, k.matrix().as_slice());
        let mut theirs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.eigenvalues().iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-10 * theirs[0], "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn hand_computed_two_point_spectrum() {
    // K = [[1, e], [e, 1]] with e = exp(-gamma * 1) has eigenvalues 1 ± e.
    let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
    let gamma: f64 = 0.7;
    let e = (-gamma).exp();
    let eig = eigendecompose(&gram_matrix(&KernelSpec::radial(gamma).unwrap(), &x).unwrap()).unwrap();
    assert!((eig.eigenvalues()[0] - (1.0 + e)).abs() < 1e-14);
    assert!((eig.eigenvalues()[1] - (1.0 - e)).abs() < 1e-14);
    let s = 0.5f64.sqrt();
    let u0 = eig.eigenvector(0);
    let u1 = eig.eigenvector(1);
    assert!((u0[0] - s).abs() < 1e-14 && (u0[1] - s).abs() < 1e-14);
    assert!((u1[0] - s).abs() < 1e-14 && (u1[1] + s).abs() < 1e-14);
}

#[test]
fn linear_kernel_rank_is_the_input_dimension() {
    let mut r = rng(9);
    for d in 1..=4 {
        let x = random_points(&mut r, 25, d);
        let eig = eigendecompose(&gram_matrix(&KernelSpec::Linear, &x).unwrap()).unwrap();
        assert_eq!(effective_rank(&eig, 1e-8), d);
    }
}

#[test]
fn effective_rank_grows_with_gamma() {
    for seed in 0..5 {
        let data = sample_dataset(&sample_mixture_model(seed), 100, seed + 50).unwrap();
        let ranks: Vec<usize> = [0.1, 0.5, 1.0, 5.0]
            .iter()
            .map(|&g| {
                let k = gram_matrix(&KernelSpec::radial(g).unwrap(), &data.x).unwrap();
                effective_rank(&eigendecompose(&k).unwrap(), 1e-12)
            })
            .collect();
        assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "seed {seed}: {ranks:?}");
    }
}

#[test]
fn duplicated_points_give_a_null_direction() {
    let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.5], [0.0, 0.0]]).unwrap();
    let eig = eigendecompose(&gram_matrix(&KernelSpec::radial(1.0).unwrap(), &x).unwrap()).unwrap();
    assert_eq!(effective_rank(&eig, 1e-12), 2);
    assert!(eig.min_eigenvalue().abs() < 1e-14);
}

#[test]
fn cross_gram_agrees_with_gram() {
    let x = random_points(&mut rng(3), 12, 3);
    let spec = KernelSpec::radial(0.8).unwrap();
    let k = gram_matrix(&spec, &x).unwrap();
    assert_eq!(cross_gram(&spec, &x, &x).unwrap().max_abs_diff(k.matrix()), 0.0);
}

#[test]
fn materially_negative_spectrum_is_rejected() {
    let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
    let k = KernelMatrix::from_matrix(m).unwrap();
    let eig = eigendecompose(&k).unwrap();
    assert!((eig.min_eigenvalue() + 1.0).abs() < 1e-14);
    assert!(matches!(feature_matrix(&eig), Err(Error::Numeric { .. })));
}

#[test]
fn bad_kernel_inputs_are_input_errors() {
    assert!(matches!(KernelSpec::radial(0.0), Err(Error::Input(_))));
    assert!(matches!(KernelSpec::radial(f64::NAN), Err(Error::Input(_))));
    let spec = KernelSpec::radial(1.0).unwrap();
    assert!(kernel_eval(&spec, &[1.0], &[1.0, 2.0]).is_err());
    assert!(KernelMatrix::from_matrix(Matrix::zeros(2, 3)).is_err());
}
