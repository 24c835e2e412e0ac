mod common;

use kernreg::mixture::{bayes_classify, derive_seed, sample_standard_normal_1d};
use kernreg::{
    bayes_error, bayes_posterior, classify, error_rate, fit, load_dataset, sample_dataset,
    sample_mixture_model, save_dataset, DatasetFormat, Error, FitSpec, KernelSpec, Loss,
};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_is_a_function_of_the_seed(seed in any::<u64>(), n in 1usize..50) {
        let m1 = sample_mixture_model(seed);
        let m2 = sample_mixture_model(seed);
        prop_assert_eq!(&m1, &m2);
        let a = sample_dataset(&m1, n, seed ^ 1).unwrap();
        let b = sample_dataset(&m2, n, seed ^ 1).unwrap();
        prop_assert_eq!(a.x.as_slice(), b.x.as_slice());
        prop_assert_eq!(&a.y, &b.y);
    }

    #[test]
    fn classes_are_balanced(seed in any::<u64>(), n in 1usize..80) {
        let ds = sample_dataset(&sample_mixture_model(seed), n, seed).unwrap();
        prop_assert_eq!(ds.len(), 2 * n);
        prop_assert_eq!(ds.y.iter().filter(|&&v| v == 1.0).count(), n);
        prop_assert_eq!(ds.y.iter().filter(|&&v| v == -1.0).count(), n);
    }

    #[test]
    fn posterior_is_a_probability(seed in any::<u64>(), x0 in -4.0f64..5.0, x1 in -4.0f64..5.0) {
        let p = bayes_posterior(&sample_mixture_model(seed), [x0, x1]);
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn pinned_first_draws() {
    // Guards against silent changes to the generator or the normal method.
    let m = sample_mixture_model(0);
    assert_eq!(m.means_pos.len(), 10);
    assert_eq!(m.means_neg.len(), 10);
    assert!((m.component_sd - 0.2f64.sqrt()).abs() < 1e-16);
    assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    let m = sample_mixture_model(2024);
    assert_eq!(m.means_pos[0], [0.3055056384366448, 1.3842309356194527]);
    assert_eq!(m.means_neg[9], [-0.7044145165556351, 1.2298024904905294]);
    let ds = sample_dataset(&m, 3, 7).unwrap();
    assert_eq!(ds.x.row(0), &[1.2393973531770266, 0.5297578661836082]);
    assert_eq!(derive_seed(1, 0), 6238072747940578789);
}

#[test]
fn component_means_are_spread_around_the_class_centers() {
    let mut sum_pos = [0.0; 2];
    let mut sum_neg = [0.0; 2];
    let draws = 400;
    for seed in 0..draws {
        let m = sample_mixture_model(seed);
        for p in &m.means_pos {
            sum_pos[0] += p[0];
            sum_pos[1] += p[1];
        }
        for p in &m.means_neg {
            sum_neg[0] += p[0];
            sum_neg[1] += p[1];
        }
    }
    let count = (draws * 10) as f64;
    // Standard error of each mean coordinate is 1/sqrt(4000) ≈ 0.016.
    for (got, want) in sum_pos.iter().zip([1.0, 0.0]).chain(sum_neg.iter().zip([0.0, 1.0])) {
        assert!((got / count - want).abs() < 0.07, "{got} vs {want}");
    }
}

#[test]
fn posterior_is_calibrated() {
    let model = sample_mixture_model(8);
    let mut rng = kernreg::mixture::rng_for(99, 5);
    let bins = 10;
    let mut total = vec![0usize; bins];
    let mut positive = vec![0usize; bins];
    let mut sum_p = vec![0.0; bins];
    for _ in 0..50_000 {
        let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let x = model.sample_point(label, &mut rng);
        let p = bayes_posterior(&model, x);
        let b = ((p * bins as f64) as usize).min(bins - 1);
        total[b] += 1;
        sum_p[b] += p;
        if label > 0.0 {
            positive[b] += 1;
        }
    }
    for b in 0..bins {
        if total[b] < 100 {
            continue;
        }
        let n = total[b] as f64;
        let freq = positive[b] as f64 / n;
        let center = sum_p[b] / n;
        let se = (center * (1.0 - center) / n).sqrt().max(1e-3);
        assert!((freq - center).abs() <= 3.0 * se + 1e-3, "bin {b}: {freq} vs {center} (n={n})");
    }
}

#[test]
fn bayes_rule_beats_fitted_classifiers() {
    for seed in 0..3 {
        let model = sample_mixture_model(seed);
        let train = sample_dataset(&model, 100, derive_seed(seed, 1)).unwrap();
        let test = sample_dataset(&model, 1000, derive_seed(seed, 2)).unwrap();
        let bayes_pred: Vec<f64> = test.x.iter_rows().map(|r| bayes_classify(&model, [r[0], r[1]])).collect();
        let bayes_test = error_rate(&bayes_pred, &test.y).unwrap();
        let mc = bayes_error(&model, 200_000, derive_seed(seed, 3)).unwrap();
        let n = test.len() as f64;
        for loss in [Loss::Hinge, Loss::BinomialDeviance] {
            for gamma in [0.5, 5.0] {
                let spec = FitSpec::new(loss, KernelSpec::radial(gamma).unwrap(), 0.01).with_max_iterations(10_000_000);
                let m = fit(&spec, &train.x, &train.y).unwrap();
                let err = error_rate(&classify(&m, &test.x).unwrap(), &test.y).unwrap();
                let se = (mc.std_error.powi(2) + err * (1.0 - err) / n).sqrt();
                assert!(mc.estimate <= err + 3.0 * se, "seed {seed} {loss} gamma {gamma}");
                assert!(bayes_test <= err + 3.0 * (2.0 * err / n).sqrt());
            }
        }
    }
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let model = sample_mixture_model(4);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| bayes_error(&model, 55_000, 12)).unwrap();
    let b = four.install(|| bayes_error(&model, 55_000, 12)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.draws, 55_000);
    assert!(matches!(bayes_error(&model, 10, 1), Err(Error::Input(_))));
}

#[test]
fn one_dimensional_sample() {
    let ds = sample_standard_normal_1d(500, 3).unwrap();
    assert_eq!(ds.dim(), 1);
    let mean: f64 = ds.x.as_slice().iter().sum::<f64>() / 500.0;
    let var: f64 = ds.x.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 499.0;
    assert!(mean.abs() < 0.15 && (var - 1.0).abs() < 0.2);
}

#[test]
fn csv_round_trip_is_exact() {
    let ds = sample_dataset(&sample_mixture_model(5), 20, 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    save_dataset(&ds, &path).unwrap();
    let back = load_dataset(&path, DatasetFormat::Csv).unwrap();
    assert_eq!(back.x.as_slice(), ds.x.as_slice());
    assert_eq!(back.y, ds.y);
}

#[test]
fn mixture_file_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mix.txt");
    std::fs::write(&path, "# x1 x2 y\n0.5 1.25 1\n-0.3 0.7 0\n\n2.0 -1.0 1\n").unwrap();
    let ds = load_dataset(&path, DatasetFormat::Esl { dim: Some(2) }).unwrap();
    assert_eq!(ds.y, vec![1.0, -1.0, 1.0]);
    assert_eq!(ds.x.row(1), &[-0.3, 0.7]);

    std::fs::write(&path, "0.5 1.25 1\n-0.3 0.7 2\n").unwrap();
    match load_dataset(&path, DatasetFormat::Esl { dim: Some(2) }) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(load_dataset(dir.path().join("missing.csv"), DatasetFormat::Csv).is_err());
}
