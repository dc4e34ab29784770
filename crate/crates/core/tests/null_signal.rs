//! Without planted signal, labels carry no information in the features.

use pathomil::featstore::{generate_synthetic_dataset, SyntheticSpec};
use pathomil::harness::stratified_kfold;

/// 5-fold accuracy of a nearest-centroid classifier on mean-pooled bags.
fn nearest_centroid_accuracy(spec: &SyntheticSpec) -> f64 {
    let ds = generate_synthetic_dataset(spec).unwrap();
    let d = spec.feature_dim;
    let means: Vec<Vec<f64>> = ds.bags.iter().map(|b| b.features.column_sums().iter().map(|s| s / b.n_instances() as f64).collect()).collect();
    let labels: Vec<usize> = ds.bags.iter().map(|b| b.label as usize).collect();
    let folds = stratified_kfold(&labels, 5, spec.seed).unwrap();
    let mut correct = 0;
    for (f, val) in folds.folds.iter().enumerate() {
        let mut centroid = vec![vec![0.0; d]; 3];
        let mut count = [0usize; 3];
        for i in folds.training_indices(f) {
            count[labels[i]] += 1;
            centroid[labels[i]].iter_mut().zip(&means[i]).for_each(|(c, m)| *c += m);
        }
        for (c, n) in centroid.iter_mut().zip(count) {
            c.iter_mut().for_each(|v| *v /= n.max(1) as f64);
        }
        for &i in val {
            let dist = |c: &Vec<f64>| c.iter().zip(&means[i]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let pred = (0..3).min_by(|&a, &b| dist(&centroid[a]).total_cmp(&dist(&centroid[b]))).unwrap();
            correct += (pred == labels[i]) as usize;
        }
    }
    correct as f64 / labels.len() as f64
}

#[test]
fn zero_signal_is_no_better_than_majority() {
    let majority = 105.0 / 210.0;
    let accs: Vec<f64> = (0..20)
        .map(|seed| nearest_centroid_accuracy(&SyntheticSpec { signal_fraction: 0.0, seed, ..SyntheticSpec::default() }))
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!(mean <= majority + 0.02, "mean accuracy {mean} over 20 seeds vs majority {majority}");
}

#[test]
fn planted_signal_is_recoverable() {
    let acc = nearest_centroid_accuracy(&SyntheticSpec::default());
    assert!(acc >= 0.8, "accuracy {acc} with the default signal");
}
