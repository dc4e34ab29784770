//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p pathomil --test acceptance`. Set
//! `PATHOMIL_ACCEPTANCE=1,2,5` to run a subset. Wall-clock limits depend on
//! the host; a miss on one of those is printed as FAIL but does not fail the
//! process on its own.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use pathomil::featstore::{generate_synthetic_dataset, FeatureBag, SyntheticSpec};
use pathomil::gbdt::{
    build_enhanced_features, find_best_split, leaf_weight, predict_ensemble, toy_dataset, train_ensemble, GbdtConfig,
    TreeEnsemble, ENHANCED_DIM, ENHANCED_FEATURE_NAMES,
};
use pathomil::harness::{cross_validate, evaluate_metrics, stratified_kfold, CvOutcome, TrainConfig};
use pathomil::mil::{
    extract_attention, AbmilConfig, AbmilParams, ClamConfig, ClamLossConfig, ClamSBParams, MilLossConfig, MilModel,
    ModelFile, ModelKind, ParamTensors,
};
use pathomil::nn::{finite_diff_grad, focal_loss, relative_error, smooth_labels, DenseMatrix, FocalLossConfig, Mode};
use pathomil::rng::Rng;
use pathomil::wsi::{build_pyramid, bundled_slide, otsu_threshold, segment_tissue, BinaryMask, SegmentationConfig};

struct Check {
    ok: bool,
    /// Wall-clock limits: reported, but not counted toward the exit status.
    host_bound: bool,
    text: String,
}

fn check(ok: bool, text: impl Into<String>) -> Check {
    Check { ok, host_bound: false, text: text.into() }
}

fn timing(ok: bool, text: impl Into<String>) -> Check {
    Check { ok, host_bound: true, text: text.into() }
}

struct Outcome {
    checks: Vec<Check>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    fn fatal(&self) -> bool {
        self.checks.iter().any(|c| !c.ok && !c.host_bound)
    }

    fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| if c.ok { c.text.clone() } else { format!("{} [MISSED]", c.text) })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

// ---- 1: gradient fidelity ----------------------------------------------

fn randomize(model: &mut MilModel, rng: &mut Rng) {
    for t in model.slices_mut() {
        for v in t.iter_mut() {
            *v = rng.uniform(-0.5, 0.5);
        }
    }
}

fn worst_gradient_error(model: &MilModel, bag: &DenseMatrix, label: usize, loss: &MilLossConfig, mode: Mode) -> f64 {
    let seed = 17;
    let lg = model.loss_and_grad(bag, label, loss, mode, &mut Rng::new(seed)).unwrap();
    let analytic = lg.grads.flatten();
    let mut probe = model.clone();
    let numeric = finite_diff_grad(
        |x| {
            probe.assign_flat(x);
            probe.loss_and_grad(bag, label, loss, mode, &mut Rng::new(seed)).map(|l| l.loss)
        },
        &model.flatten(),
        1e-5,
    )
    .unwrap();
    analytic.iter().zip(&numeric).map(|(a, n)| relative_error(*a, *n, 1e-6)).fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(101);
    let mut worst: f64 = 0.0;
    let instances = 24;
    for i in 0..instances {
        let feat = rng.range_inclusive(12, 16);
        let n = rng.range_inclusive(5, 8);
        let label = rng.below(3) as usize;
        let mode = if i % 4 < 2 { Mode::Eval } else { Mode::Train };
        let (mut model, loss) = if i % 2 == 0 {
            let cfg = ClamConfig {
                feat_dim: feat,
                embed_dim: 8,
                attention_hidden: 6,
                classifier_hidden: 5,
                n_classes: 3,
                dropout: 0.4,
            };
            let loss = MilLossConfig::Clam(ClamLossConfig {
                focal: FocalLossConfig::default(),
                bag_weight: 0.5,
                b: 2,
            });
            (MilModel::ClamSb(ClamSBParams::init(&cfg, &mut rng)), loss)
        } else {
            let cfg = AbmilConfig { feat_dim: feat, n_heads: 2, head_hidden: 4, bottleneck_dim: 6, n_classes: 3, dropout: 0.4 };
            let w = vec![rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)];
            (MilModel::Abmil(AbmilParams::init(&cfg, &mut rng)), MilLossConfig::Abmil { class_weights: w })
        };
        randomize(&mut model, &mut rng);
        let bag = DenseMatrix::from_fn(n, feat, |_, _| rng.gaussian());
        worst = worst.max(worst_gradient_error(&model, &bag, label, &loss, mode));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        checks: vec![
            check(worst < 1e-4, format!("{instances} instances, worst relative error {worst:.2e} < 1e-4")),
            timing(secs < 30.0, format!("runtime {secs:.1} s < 30 s")),
        ],
    }
}

// ---- 2: best-fold arithmetic -------------------------------------------

fn criterion_2() -> Outcome {
    // (truth, predicted, count): 12/12 low, 1/2 medium, 4/7 high.
    let cells = [(0, 0, 12), (1, 1, 1), (1, 0, 1), (2, 2, 4), (2, 0, 2), (2, 1, 1)];
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for &(t, p, n) in &cells {
        for _ in 0..n {
            let mut v = vec![0.1; 3];
            v[p] = 0.8;
            probs.push(v);
            labels.push(t);
        }
    }
    let m = evaluate_metrics(&probs, &labels).unwrap();
    let three = format!("{:.3}", m.accuracy);
    Outcome {
        checks: vec![
            check((m.accuracy - 0.8095).abs() <= 5e-4, format!("accuracy {:.4} = 0.8095 +/- 5e-4", m.accuracy)),
            check(three == "0.810", format!("3-decimal value {three} matches reported fold accuracy 0.810")),
        ],
    }
}

// ---- 3 and 4: separability and attention localization ------------------

fn separability_spec() -> SyntheticSpec {
    SyntheticSpec { signal_fraction: 0.5, noise_sigma: 0.5, seed: 42, ..SyntheticSpec::default() }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(5)
}

fn run_cv(bags: &[FeatureBag], kind: ModelKind) -> (CvOutcome, f64) {
    let start = Instant::now();
    let out = cross_validate(bags, &TrainConfig::defaults(kind), 5, jobs()).unwrap();
    (out, start.elapsed().as_secs_f64())
}

fn criteria_3_4() -> (Outcome, Outcome) {
    let ds = generate_synthetic_dataset(&separability_spec()).unwrap();
    let (clam, t_clam) = run_cv(&ds.bags, ModelKind::ClamSb);
    let (abmil, t_abmil) = run_cv(&ds.bags, ModelKind::Abmil);
    let ca = clam.report.mean.accuracy;
    let cauc = clam.report.mean.auc.unwrap_or(f64::NAN);
    let aa = abmil.report.mean.accuracy;
    let total = t_clam + t_abmil;
    let c3 = Outcome {
        checks: vec![
            check(ca >= 0.90, format!("clam-sb mean accuracy {ca:.3} >= 0.90")),
            check(cauc >= 0.95, format!("clam-sb mean macro-OVR AUC {cauc:.3} >= 0.95")),
            check(aa >= 0.85, format!("abmil mean accuracy {aa:.3} >= 0.85")),
            timing(
                total < 300.0,
                format!(
                    "runtime {total:.0} s (clam {t_clam:.0} s, abmil {t_abmil:.0} s, {} worker(s)) < 300 s",
                    jobs()
                ),
            ),
        ],
    };

    let (mut localized, mut total_bags) = (0usize, 0usize);
    for fold in &clam.folds {
        for &i in &fold.val_indices {
            let mut bag = ds.bags[i].clone();
            if let Some(s) = &fold.scaler {
                s.apply(&mut bag).unwrap();
            }
            let att = extract_attention(&fold.model, &bag.features, None).unwrap();
            let flags = &ds.signal[i];
            let mean = |want: bool| {
                let v: Vec<f64> = att.iter().zip(flags).filter(|(_, &f)| f == want).map(|(a, _)| *a).collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            total_bags += 1;
            localized += (mean(true) >= 2.0 * mean(false)) as usize;
        }
    }
    let frac = localized as f64 / total_bags as f64;
    let c4 = Outcome {
        checks: vec![check(
            frac >= 0.8,
            format!("{localized}/{total_bags} validation bags ({:.1}%) with signal/background attention >= 2 (need >= 80%)", 100.0 * frac),
        )],
    };
    (c3, c4)
}

// ---- 5: loss reductions ------------------------------------------------

fn reference_cross_entropy(logits: &[f64], y: usize) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    lse - logits[y]
}

fn criterion_5() -> Outcome {
    let mut rng = Rng::new(5);
    let plain = FocalLossConfig { alpha: vec![1.0; 3], gamma: 0.0, smoothing_eps: 0.0 };
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let logits: Vec<f64> = (0..3).map(|_| rng.uniform(-6.0, 6.0)).collect();
        let y = rng.below(3) as usize;
        let target = smooth_labels(y, 0.0, 3).unwrap();
        let got = focal_loss(&logits, &target, y, &plain).unwrap().loss;
        worst = worst.max((got - reference_cross_entropy(&logits, y)).abs());
    }
    let mut simplex = true;
    let mut floor_exact = true;
    for _ in 0..1000 {
        let k = 2 + rng.below(9) as usize;
        let eps = rng.uniform(0.0, 0.99);
        let t = smooth_labels(rng.below(k as u64) as usize, eps, k).unwrap();
        let d = &t.distribution;
        simplex &= d.iter().all(|&v| v >= 0.0) && (d.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        floor_exact &= d.iter().cloned().fold(f64::INFINITY, f64::min) == eps / k as f64;
    }
    Outcome {
        checks: vec![
            check(worst <= 1e-12, format!("focal(gamma=0, alpha=1, eps=0) vs cross-entropy max |diff| {worst:.1e} <= 1e-12 on 1000 pairs")),
            check(simplex, "smoothed targets on the simplex (sum within 1e-12)"),
            check(floor_exact, "min entry exactly eps/K"),
        ],
    }
}

// ---- 6: Otsu -----------------------------------------------------------

/// Exhaustive search over all 256 thresholds with exact rational
/// between-class variance `w0·w1·(mu0 − mu1)²`; smallest maximiser wins.
fn otsu_oracle(hist: &[u64; 256]) -> u8 {
    let total: u64 = hist.iter().sum();
    let mut best: Option<(usize, BigRational)> = None;
    for t in 0..256 {
        let n0: u64 = hist[..=t].iter().sum();
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s0: u64 = hist[..=t].iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
        let s1: u64 = hist[t + 1..].iter().enumerate().map(|(i, &c)| (i + t + 1) as u64 * c).sum();
        let q = |a: u64, b: u64| BigRational::new(BigInt::from(a), BigInt::from(b));
        let w0 = q(n0, total);
        let w1 = q(n1, total);
        let d = q(s0, n0) - q(s1, n1);
        let var = w0 * w1 * &d * &d;
        if best.as_ref().map_or(true, |(_, b)| var > *b) {
            best = Some((t, var));
        }
    }
    match best {
        Some((t, _)) => t as u8,
        None => hist.iter().position(|&c| c > 0).unwrap() as u8,
    }
}

fn random_histogram(rng: &mut Rng, case: usize) -> [u64; 256] {
    let mut h = [0u64; 256];
    match case % 4 {
        // Dense noise.
        0 => h.iter_mut().for_each(|c| *c = rng.below(1000)),
        // A handful of spikes, including ties by symmetry.
        1 => {
            for _ in 0..1 + rng.below(4) {
                h[rng.below(256) as usize] += 1 + rng.below(50);
            }
        }
        // Two bumps.
        2 => {
            let (a, b) = (rng.below(128) as f64, 128.0 + rng.below(128) as f64);
            for (i, c) in h.iter_mut().enumerate() {
                let x = i as f64;
                *c = (500.0 * (-((x - a) / 12.0).powi(2)).exp() + 300.0 * (-((x - b) / 20.0).powi(2)).exp()) as u64;
            }
            h[rng.below(256) as usize] += 1;
        }
        // Huge counts.
        _ => {
            for _ in 0..8 {
                h[rng.below(256) as usize] = rng.below(1 << 40);
            }
        }
    }
    h
}

fn level0_agreement(mask: &BinaryMask, truth: &BinaryMask) -> (f64, f64) {
    let d = mask.downsample;
    let (mut tp, mut t, mut fp, mut b) = (0usize, 0usize, 0usize, 0usize);
    for y in 0..truth.height {
        for x in 0..truth.width {
            let m = mask.get((x / d).min(mask.width - 1), (y / d).min(mask.height - 1));
            if truth.get(x, y) {
                t += 1;
                tp += m as usize;
            } else {
                b += 1;
                fp += m as usize;
            }
        }
    }
    (tp as f64 / t as f64, fp as f64 / b as f64)
}

fn criterion_6() -> Outcome {
    let mut rng = Rng::new(6);
    let mut mismatches = 0;
    for case in 0..1000 {
        let h = random_histogram(&mut rng, case);
        if h.iter().all(|&c| c == 0) {
            continue;
        }
        if otsu_threshold(&h).unwrap().threshold != otsu_oracle(&h) {
            mismatches += 1;
        }
    }
    let slide = bundled_slide();
    let pyr = build_pyramid(&slide.image, 8).unwrap();
    let seg = segment_tissue(&pyr, &SegmentationConfig::default()).unwrap();
    let (recall, fp) = level0_agreement(&seg.mask, &slide.tissue);
    Outcome {
        checks: vec![
            check(mismatches == 0, format!("{mismatches} threshold mismatches vs exhaustive search on 1000 histograms")),
            check(recall >= 0.95, format!("bundled slide tissue covered {:.1}% >= 95%", 100.0 * recall)),
            check(fp <= 0.05, format!("background covered {:.2}% <= 5%", 100.0 * fp)),
        ],
    }
}

// ---- 7: GBDT -----------------------------------------------------------

fn leaf_objective(g: &[f64], h: &[f64], lambda: f64) -> f64 {
    let gs: f64 = g.iter().sum();
    let hs: f64 = h.iter().sum();
    -0.5 * gs * gs / (hs + lambda)
}

/// Best gain over every boundary between distinct sorted values.
fn brute_force_gain(values: &[f64], g: &[f64], h: &[f64], lambda: f64, gamma: f64, mch: f64) -> Option<f64> {
    let parent = leaf_objective(g, h, lambda);
    let mut best: Option<f64> = None;
    for k in 1..values.len() {
        if values[k] == values[k - 1] {
            continue;
        }
        let hl: f64 = h[..k].iter().sum();
        let hr: f64 = h[k..].iter().sum();
        if hl < mch || hr < mch {
            continue;
        }
        let gain = parent - leaf_objective(&g[..k], &h[..k], lambda) - leaf_objective(&g[k..], &h[k..], lambda) - gamma;
        best = Some(best.map_or(gain, |b: f64| b.max(gain)));
    }
    best.filter(|&g| g > 0.0)
}

fn criterion_7() -> Outcome {
    let mut rng = Rng::new(7);
    let mut worst_gain: f64 = 0.0;
    let mut presence_mismatch = 0;
    for _ in 0..1000 {
        let n = 2 + rng.below(40) as usize;
        let mut values: Vec<f64> = (0..n).map(|_| (rng.below(15) as f64) * 0.25).collect();
        values.sort_by(f64::total_cmp);
        let g: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.uniform(0.01, 0.25)).collect();
        let lambda = rng.uniform(0.0, 2.0);
        let mch = rng.uniform(0.0, 0.5);
        match (find_best_split(&values, &g, &h, lambda, 0.0, mch), brute_force_gain(&values, &g, &h, lambda, 0.0, mch)) {
            (Some(s), Some(b)) => worst_gain = worst_gain.max((s.gain - b).abs()),
            (None, None) => {}
            _ => presence_mismatch += 1,
        }
    }
    let mut weights_ok = true;
    for _ in 0..1000 {
        let (gs, hs, lambda) = (rng.uniform(-50.0, 50.0), rng.uniform(0.0, 40.0), rng.uniform(0.0, 3.0));
        weights_ok &= leaf_weight(gs, hs, lambda) == -gs / (hs + lambda);
    }
    let (x, y) = toy_dataset();
    let names = ENHANCED_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let cfg = GbdtConfig::default();
    let trained = train_ensemble(&x, &y, names, &cfg).unwrap();
    let max_rise = trained.loss_history.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let correct = (0..x.rows())
        .filter(|&r| pathomil::nn::argmax(&predict_ensemble(&trained.ensemble, x.row(r)).unwrap().probs) == y[r])
        .count();
    Outcome {
        checks: vec![
            check(
                worst_gain <= 1e-10 && presence_mismatch == 0,
                format!("split gain vs brute force max |diff| {worst_gain:.1e} <= 1e-10 on 1000 columns ({presence_mismatch} presence mismatches)"),
            ),
            check(weights_ok, "leaf weights equal -G/(H+lambda)"),
            check(
                max_rise <= 1e-12,
                format!(
                    "toy log-loss non-increasing over {} rounds (largest step {max_rise:+.1e}, rounding tolerance 1e-12)",
                    cfg.n_rounds
                ),
            ),
            check(correct == x.rows(), format!("toy training accuracy {correct}/{}", x.rows())),
        ],
    }
}

// ---- 8: enhanced features ----------------------------------------------

fn criterion_8() -> Outcome {
    let mut rng = Rng::new(8);
    let mut all_ok = true;
    for case in 0..2000 {
        let n = 1 + rng.below(400) as usize;
        let scale = [1.0, 50.0, 1e-3][case % 3];
        let logits: Vec<f64> = (0..3).map(|_| rng.uniform(-scale, scale)).collect();
        let probs = pathomil::nn::softmax(&logits).unwrap();
        let mut att: Vec<f64> = match case % 4 {
            0 => (0..n).map(|_| rng.next_f64()).collect(),
            1 => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
            2 => vec![1.0; n],
            _ => (0..n).map(|_| rng.next_f64().powi(8)).collect(),
        };
        let s: f64 = att.iter().sum();
        if s == 0.0 {
            att[0] = 1.0;
        } else {
            att.iter_mut().for_each(|a| *a /= s);
        }
        let f = build_enhanced_features(&logits, &probs, &att).unwrap();
        all_ok &= f.0.len() == ENHANCED_DIM && f.0.iter().all(|v| v.is_finite());
    }
    let idx = |name: &str| ENHANCED_FEATURE_NAMES.iter().position(|n| *n == name).unwrap();
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 3, 7, 64, 1000] {
        let att = vec![1.0 / n as f64; n];
        let f = build_enhanced_features(&[0.1, 0.2, 0.3], &[0.3, 0.3, 0.4], &att).unwrap().0;
        worst = worst
            .max((f[idx("attn_entropy")] - (n as f64).ln()).abs())
            .max(f[idx("attn_gini")].abs())
            .max((f[idx("attn_top1")] - 1.0 / n as f64).abs());
    }
    Outcome {
        checks: vec![
            check(all_ok, format!("2000 random inputs give exactly {ENHANCED_DIM} finite values")),
            check(worst <= 1e-6, format!("uniform attention entropy/gini/top-1 closed forms, max |diff| {worst:.1e} <= 1e-6")),
        ],
    }
}

// ---- 9: formats --------------------------------------------------------

fn criterion_9() -> Outcome {
    let mut rng = Rng::new(9);
    let mut bag_ok = true;
    for i in 0..50 {
        let n = 1 + rng.below(20) as usize;
        let d = 1 + rng.below(10) as usize;
        let f = DenseMatrix::from_fn(n, d, |_, _| rng.gaussian() * 10.0);
        let coords = (0..n).map(|_| (rng.below(1 << 20) as u32, rng.below(1 << 20) as u32)).collect();
        let b = FeatureBag::new(format!("slide-{i}-\u{e9}"), rng.below(3) as u8, coords, f).unwrap();
        let once = b.to_bytes().unwrap();
        let twice = FeatureBag::from_bytes(&once).unwrap().to_bytes().unwrap();
        bag_ok &= once == twice;
    }
    let mut model_ok = true;
    for i in 0..20 {
        let feat = 2 + rng.below(8) as usize;
        let mut model = if i % 2 == 0 {
            let cfg = ClamConfig { feat_dim: feat, embed_dim: 5, attention_hidden: 4, classifier_hidden: 3, n_classes: 3, dropout: 0.4 };
            MilModel::ClamSb(ClamSBParams::init(&cfg, &mut rng))
        } else {
            let cfg = AbmilConfig { feat_dim: feat, n_heads: 3, head_hidden: 4, bottleneck_dim: 5, n_classes: 3, dropout: 0.4 };
            MilModel::Abmil(AbmilParams::init(&cfg, &mut rng))
        };
        randomize(&mut model, &mut rng);
        let hyper = serde_json::json!({ "lr": rng.next_f64(), "tag": i });
        let once = model.save_bytes(&hyper, rng.next_u64());
        let file = ModelFile::from_bytes(&once).unwrap();
        model_ok &= file.model.save_bytes(&file.hyperparameters, file.seed) == once;
    }
    let mut gbdt_ok = true;
    for _ in 0..10 {
        let (m, p) = (10 + rng.below(30) as usize, 1 + rng.below(5) as usize);
        let x = DenseMatrix::from_fn(m, p, |_, _| rng.gaussian());
        let y: Vec<usize> = (0..m).map(|_| rng.below(3) as usize).collect();
        let names = (0..p).map(|j| format!("f{j}")).collect();
        let cfg = GbdtConfig { n_rounds: 1 + rng.below(5) as usize, max_depth: 1 + rng.below(4) as usize, ..GbdtConfig::default() };
        let ens = train_ensemble(&x, &y, names, &cfg).unwrap().ensemble;
        let once = ens.to_bytes().unwrap();
        gbdt_ok &= TreeEnsemble::from_bytes(&once).unwrap().to_bytes().unwrap() == once;
    }
    let header_bag = FeatureBag::new(
        "s1",
        1,
        vec![(0, 0), (256, 512)],
        DenseMatrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.1, 0.2, 0.3]).unwrap(),
    )
    .unwrap();
    let bytes = header_bag.to_bytes().unwrap();
    // magic, version, n, d, label, 3 reserved, id length, id.
    let expected: &[u8] = b"BAG1\x01\x00\x00\x00\x02\x00\x00\x00\x03\x00\x00\x00\x01\x00\x00\x00\x02\x00s1";
    Outcome {
        checks: vec![
            check(bag_ok, "BAG1 write-read-write byte-stable (50 random bags)"),
            check(model_ok, "PMD1 byte-stable (20 random models)"),
            check(gbdt_ok, "PGB1 byte-stable (10 random ensembles)"),
            check(bytes.starts_with(expected), "BAG1 header bytes for n=2, d=3, label=1"),
        ],
    }
}

// ---- 10: CLI determinism and leakage guard -----------------------------

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pathomil")).args(args).output().expect("spawn pathomil")
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let data = d.join("data");
    let synth = cli(&[
        "synth", "--out", &s(&data), "--bags-per-class", "6,3,6", "--feature-dim", "8", "--min-instances", "6",
        "--max-instances", "12", "--test-fraction", "0.34",
    ]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    let manifest = s(&data.join("manifest.json"));
    let cv = |out: &Path, jobs: &str| {
        let o = cli(&[
            "cv", "--manifest", &manifest, "--model", "clam-sb", "--folds", "5", "--seed", "1", "--jobs", jobs, "--out", &s(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = cv(&d.join("a.json"), "1");
    let b = cv(&d.join("b.json"), "1");
    let c = cv(&d.join("c.json"), "3");

    let model = d.join("m.pmd");
    let train = cli(&["train", "--manifest", &manifest, "--out", &s(&model), "--max-epochs", "2"]);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    let refused = cli(&["eval", "--model", &s(&model), "--manifest", &manifest]);
    let accepted = cli(&["eval", "--model", &s(&model), "--manifest", &s(&data.join("test_manifest.json"))]);
    Outcome {
        checks: vec![
            check(a == b, format!("two `cv` runs byte-identical ({} bytes)", a.len())),
            check(a == c, "identical with --jobs 3"),
            check(refused.status.code() == Some(1), format!("`eval` on non-test entries exits {:?}", refused.status.code())),
            check(accepted.status.success(), "`eval` on test-only manifest exits 0"),
        ],
    }
}

// ---- 11: k-fold contract -----------------------------------------------

fn criterion_11() -> Outcome {
    let labels: Vec<usize> = [(0, 105), (1, 21), (2, 84)].iter().flat_map(|&(c, n)| vec![c; n]).collect();
    let mut ok = true;
    for seed in 0..50 {
        let a = stratified_kfold(&labels, 5, seed).unwrap();
        let mut seen = vec![0usize; labels.len()];
        for f in &a.folds {
            f.iter().for_each(|&i| seen[i] += 1);
        }
        ok &= seen.iter().all(|&c| c == 1);
        for class in 0..3 {
            let counts: Vec<usize> = a.folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == class).count()).collect();
            ok &= counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1;
        }
    }
    let sizes: Vec<usize> = stratified_kfold(&labels, 5, 42).unwrap().folds.iter().map(Vec::len).collect();
    Outcome {
        checks: vec![check(ok, format!("disjoint, covering, per-class spread <= 1 over 50 seeds (fold sizes {sizes:?})"))],
    }
}

fn main() {
    let selected: Option<Vec<u32>> = std::env::var("PATHOMIL_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let want = |i: u32| selected.as_ref().map_or(true, |s| s.contains(&i));
    let titles = [
        "gradient fidelity",
        "best-fold accuracy arithmetic",
        "synthetic separability",
        "attention localization",
        "loss reductions",
        "Otsu oracle and bundled slide",
        "GBDT correctness",
        "23-feature contract",
        "format round trips",
        "determinism and leakage guard",
        "k-fold contract",
    ];
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    for (i, f) in [(1, criterion_1 as fn() -> Outcome), (2, criterion_2)] {
        if want(i) {
            let o = f();
            report(i, titles[i as usize - 1], &o);
            results.push((i, o));
        }
    }
    if want(3) || want(4) {
        let (c3, c4) = criteria_3_4();
        for (i, o) in [(3, c3), (4, c4)] {
            if want(i) {
                report(i, titles[i as usize - 1], &o);
                results.push((i, o));
            }
        }
    }
    for (i, f) in [
        (5, criterion_5 as fn() -> Outcome),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ] {
        if want(i) {
            let o = f();
            report(i, titles[i as usize - 1], &o);
            results.push((i, o));
        }
    }
    let passed = results.iter().filter(|(_, o)| o.passed()).count();
    let fatal: Vec<u32> = results.iter().filter(|(_, o)| o.fatal()).map(|(i, _)| *i).collect();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    let host_only: Vec<u32> = results.iter().filter(|(_, o)| !o.passed() && !o.fatal()).map(|(i, _)| *i).collect();
    if !host_only.is_empty() {
        println!("acceptance: criteria {host_only:?} missed only a wall-clock limit on this host");
    }
    if !fatal.is_empty() {
        eprintln!("acceptance: failing criteria {fatal:?}");
        std::process::exit(1);
    }
}

fn report(i: u32, title: &str, o: &Outcome) {
    let verdict = if o.passed() { "PASS" } else { "FAIL" };
    println!("criterion {i:>2} {verdict}  {title}: {}", o.summary());
}
