use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};
use pathomil::gbdt::*;
use pathomil::nn::DenseMatrix;
use pathomil::rng::Rng;

/// Leaf objective `-½ G² / (H + λ)`.
fn leaf_objective(g: &[f64], h: &[f64], lambda: f64) -> f64 {
    let gs: f64 = g.iter().sum();
    let hs: f64 = h.iter().sum();
    -0.5 * gs * gs / (hs + lambda)
}

/// Tries every boundary between distinct values and scores the objective drop directly.
fn brute_force_best(values: &[f64], g: &[f64], h: &[f64], lambda: f64, gamma: f64, mch: f64) -> Option<(f64, f64)> {
    let parent = leaf_objective(g, h, lambda);
    let mut best: Option<(f64, f64)> = None;
    for k in 1..values.len() {
        if values[k] == values[k - 1] {
            continue;
        }
        let (hl, hr): (f64, f64) = (h[..k].iter().sum(), h[k..].iter().sum());
        if hl < mch || hr < mch {
            continue;
        }
        let gain = parent - leaf_objective(&g[..k], &h[..k], lambda) - leaf_objective(&g[k..], &h[k..], lambda) - gamma;
        if best.map_or(true, |(b, _)| gain > b) {
            best = Some((gain, (values[k - 1] + values[k]) / 2.0));
        }
    }
    best.filter(|(g, _)| *g > 0.0)
}

#[test]
fn split_gain_matches_brute_force() {
    let mut rng = Rng::new(99);
    let mut compared = 0;
    for _ in 0..1000 {
        let n = 2 + rng.below(30) as usize;
        let mut values: Vec<f64> = (0..n).map(|_| (rng.below(12) as f64) * 0.5).collect();
        values.sort_by(f64::total_cmp);
        let g: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.uniform(0.01, 0.25)).collect();
        let lambda = rng.uniform(0.0, 2.0);
        let gamma = if rng.next_f64() < 0.5 { 0.0 } else { rng.uniform(0.0, 0.05) };
        let mch = if rng.next_f64() < 0.5 { 0.0 } else { 0.3 };
        let got = find_best_split(&values, &g, &h, lambda, gamma, mch);
        let want = brute_force_best(&values, &g, &h, lambda, gamma, mch);
        match (got, want) {
            (Some(s), Some((gain, thr))) => {
                assert!((s.gain - gain).abs() < 1e-10, "{} vs {}", s.gain, gain);
                assert_eq!(s.threshold, thr);
                compared += 1;
            }
            (None, None) => {}
            (a, b) => panic!("split presence differs: {a:?} vs {b:?}"),
        }
    }
    assert!(compared > 500);
}

#[test]
fn leaf_weights_are_exact_newton_steps() {
    let mut rng = Rng::new(5);
    for _ in 0..200 {
        let g: f64 = rng.uniform(-5.0, 5.0);
        let h: f64 = rng.uniform(0.1, 5.0);
        let lambda: f64 = rng.uniform(0.0, 3.0);
        let w = leaf_weight(g, h, lambda);
        // The only rounding steps are H + λ and the division itself.
        let denom = h + lambda;
        let exact = -BigRational::from_f64(g).unwrap() / BigRational::from_f64(denom).unwrap();
        assert_eq!(w, exact.to_f64().unwrap());
        let real = -BigRational::from_f64(g).unwrap()
            / (BigRational::from_f64(h).unwrap() + BigRational::from_f64(lambda).unwrap());
        assert!((w - real.to_f64().unwrap()).abs() <= 4.0 * f64::EPSILON * w.abs());
    }
}

#[test]
fn grad_sums_to_zero() {
    let mut rng = Rng::new(8);
    for _ in 0..500 {
        let l: Vec<f64> = (0..3).map(|_| rng.uniform(-10.0, 10.0)).collect();
        let (g, h) = softmax_grad_hess(&l, rng.below(3) as usize).unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
        assert!(h.iter().all(|&v| v >= 1e-16));
    }
}

#[test]
fn toy_set_defaults_monotone_and_exact() {
    let (x, y) = toy_dataset();
    let names = ENHANCED_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let t = train_ensemble(&x, &y, names, &GbdtConfig::default()).unwrap();
    assert_eq!(t.ensemble.trees.len(), 200);
    for w in t.loss_history.windows(2) {
        // Once the fit saturates, rounds add ~0 and only rounding noise remains.
        assert!(w[1] <= w[0] + 1e-12, "loss rose {} -> {}", w[0], w[1]);
    }
    for (i, &c) in y.iter().enumerate() {
        let p = predict_ensemble(&t.ensemble, x.row(i)).unwrap();
        assert_eq!(pathomil::nn::argmax(&p.probs), c, "row {i}");
    }
    for round in &t.ensemble.trees {
        assert!(round.iter().all(|tree| tree.depth() <= 6));
    }
}

#[test]
fn sample_order_does_not_change_the_model() {
    let (x, y) = toy_dataset();
    let mut rng = Rng::new(1);
    let mut perm: Vec<usize> = (0..y.len()).collect();
    rng.shuffle(&mut perm);
    let xp = DenseMatrix::from_fn(x.rows(), x.cols(), |r, c| x.get(perm[r], c));
    let yp: Vec<usize> = perm.iter().map(|&i| y[i]).collect();
    let cfg = GbdtConfig { n_rounds: 10, ..Default::default() };
    let names: Vec<String> = ENHANCED_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let a = train_ensemble(&x, &y, names.clone(), &cfg).unwrap();
    let b = train_ensemble(&xp, &yp, names, &cfg).unwrap();
    assert_eq!(a.ensemble.to_bytes().unwrap(), b.ensemble.to_bytes().unwrap());
}
