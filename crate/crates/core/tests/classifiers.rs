use polarlex_core::classifiers::{
    evaluate, predict, train, ClassifierKind, ClassifierSpec, Dataset, Hyperparameters, KnnParams,
    Mlp,
};
use polarlex_core::synthetic::separable_dataset;
use polarlex_core::Sentiment;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn knn(k: usize) -> ClassifierSpec {
    ClassifierSpec::with(Hyperparameters::Knn(KnnParams { k }), 0)
}

#[test]
fn linear_svm_separates_separable_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..20 {
        let n = rng.gen_range(10..=100);
        let d = rng.gen_range(2..=10);
        let data = separable_dataset(n, d, 0.1, &mut rng);
        let model = train(
            &ClassifierSpec::new(ClassifierKind::LinearSvm, round),
            &data,
        )
        .unwrap();
        assert_eq!(
            evaluate(&model, &data).unwrap().accuracy_pct,
            100.0,
            "round {round}"
        );
    }
}

#[test]
fn every_classifier_is_bit_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = separable_dataset(60, 5, 0.0, &mut rng);
    for kind in ClassifierKind::ALL {
        let a = train(&ClassifierSpec::new(kind, 42), &data).unwrap();
        let b = train(&ClassifierSpec::new(kind, 42), &data).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap(), "{kind}");
    }
}

#[test]
fn seed_changes_stochastic_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data = separable_dataset(60, 5, 0.0, &mut rng);
    for kind in [ClassifierKind::RandomForest, ClassifierKind::Mlp] {
        let a = train(&ClassifierSpec::new(kind, 1), &data).unwrap();
        let b = train(&ClassifierSpec::new(kind, 2), &data).unwrap();
        assert_ne!(a, b, "{kind}");
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = Mlp::init(4, 6, &mut rng);
    let x: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    let y: Vec<f64> = (0..5)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let (_, grad) = net.batch_loss_and_gradient(&x, &y);
    let analytic = grad.flatten();
    let theta = net.flatten();
    let h = 1e-6;
    for (i, &g) in analytic.iter().enumerate() {
        let mut plus = theta.clone();
        plus[i] += h;
        let mut minus = theta.clone();
        minus[i] -= h;
        let lp = net.with_flat(&plus).batch_loss_and_gradient(&x, &y).0;
        let lm = net.with_flat(&minus).batch_loss_and_gradient(&x, &y).0;
        let numeric = (lp - lm) / (2.0 * h);
        if g.abs() < 1e-7 && numeric.abs() < 1e-7 {
            continue;
        }
        assert!(
            relative_error(g, numeric) < 1e-4,
            "param {i}: {g} vs {numeric}"
        );
    }
}

#[test]
fn knn_tie_goes_to_nearest() {
    let data = Dataset::unnamed(
        vec![vec![0.0], vec![1.0], vec![3.0], vec![10.0]],
        vec![
            Sentiment::Negative,
            Sentiment::Positive,
            Sentiment::Positive,
            Sentiment::Negative,
        ],
    )
    .unwrap();
    let model = train(&knn(2), &data).unwrap();
    // Nearest two to 0.4 are indices 0 (neg) and 1 (pos); index 0 is closer.
    assert_eq!(predict(&model, &[0.4]).unwrap(), Sentiment::Negative);
    assert_eq!(predict(&model, &[0.6]).unwrap(), Sentiment::Positive);
}

fn labels_strategy() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_with_k_equal_n_predicts_majority(labels in labels_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<Vec<f64>> = labels
            .iter()
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<Sentiment> = labels
            .into_iter()
            .map(|p| if p { Sentiment::Positive } else { Sentiment::Negative })
            .collect();
        let pos = labels.iter().filter(|l| **l == Sentiment::Positive).count();
        let neg = labels.len() - pos;
        prop_assume!(pos != neg);
        let majority = if pos > neg { Sentiment::Positive } else { Sentiment::Negative };
        let data = Dataset::unnamed(features, labels.clone()).unwrap();
        for k in [labels.len(), labels.len() + 7] {
            let model = train(&knn(k), &data).unwrap();
            for _ in 0..5 {
                let probe: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
                prop_assert_eq!(predict(&model, &probe).unwrap(), majority);
            }
        }
    }

    #[test]
    fn knn_ignores_per_feature_affine_maps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = separable_dataset(30, 3, 0.0, &mut rng);
        let scale: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..50.0)).collect();
        let shift: Vec<f64> = (0..3).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let map = |x: &[f64]| -> Vec<f64> {
            x.iter().zip(&scale).zip(&shift).map(|((v, a), b)| v * a + b).collect()
        };
        let mapped = Dataset::unnamed(
            data.features().iter().map(|x| map(x)).collect(),
            data.labels().to_vec(),
        ).unwrap();
        let a = train(&knn(3), &data).unwrap();
        let b = train(&knn(3), &mapped).unwrap();
        let mut agree = 0;
        for _ in 0..40 {
            let probe: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if predict(&a, &probe).unwrap() == predict(&b, &map(&probe)).unwrap() {
                agree += 1;
            }
        }
        // Rounding can only matter at exact distance ties.
        prop_assert!(agree >= 39, "agreement {}", agree);
    }
}
