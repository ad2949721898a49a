use arxivnet::learn::{
    evaluate, fit, metrics_from_probs, train, CategoryMatrix, DatasetSplit, FeatureMatrix, Hyper,
};
use arxivnet::par::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Three Gaussian blobs separated along three of 512 dimensions.
fn blobs(n: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_range(0..3);
        let mut x: Vec<f32> = (0..512).map(|_| noise.sample(&mut rng) as f32 * 0.1).collect();
        for (k, v) in x.iter_mut().take(3).enumerate() {
            *v = noise.sample(&mut rng) as f32 + if k == y { 2.0 } else { 0.0 };
        }
        rows.push(x);
        labels.push(y);
    }
    (FeatureMatrix::from_rows(512, rows).unwrap(), labels)
}

#[test]
fn separable_blobs_are_learned() {
    let (x, y) = blobs(2000, 11);
    let rows: Vec<usize> = (0..2000).collect();
    let (params, summary) = fit(&x, &y, 3, &rows, &Hyper::default()).unwrap();
    let probs: Vec<Vec<f64>> = rows.iter().map(|&i| params.predict_proba(x.row(i))).collect();
    let m = metrics_from_probs(&probs, &y);
    assert!(m.top_1 >= 0.99, "train top-1 {} after {} epochs", m.top_1, summary.epochs_run);
}

#[test]
fn zero_features_predict_priors() {
    let n = 600;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // priors 0.5 / 0.3 / 0.2
    let primaries: Vec<&str> = (0..n)
        .map(|_| match rng.random_range(0..10) {
            0..=4 => "math.CO",
            5..=7 => "cs.AI",
            _ => "hep-th",
        })
        .collect();
    let c = CategoryMatrix::from_primaries(primaries.iter().copied());
    let x = FeatureMatrix::zeros(n, 4);
    let split = DatasetSplit::new(n, 450, 1).unwrap();
    let model = train(&x, &c, &split, &Hyper::default(), "none").unwrap();
    let p = model.predict_proba(&[0.0; 4]);
    let freq = |l: usize| split.train().iter().filter(|&&i| c.label(i) == l).count() as f64 / 450.0;
    for (l, &pl) in p.iter().enumerate() {
        assert!((pl - freq(l)).abs() < 0.05, "class {l}: p {pl} vs prior {}", freq(l));
    }
    let majority = (0..3).max_by(|&a, &b| freq(a).total_cmp(&freq(b))).unwrap();
    let m = evaluate(&model, &x, &c, &split, Exec::Parallel).unwrap();
    let expected = split.test().iter().filter(|&&i| c.label(i) == majority).count() as f64 / split.test().len() as f64;
    assert_eq!(m.top_1, expected);
}
