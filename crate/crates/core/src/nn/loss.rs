//! Classification losses with exact gradients with respect to the logits.

use serde::{Deserialize, Serialize};

use super::ops::log_softmax;
use crate::error::{Error, Result};

/// Floor applied to probabilities before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocalLossConfig {
    /// Per-class weight applied when that class is the target.
    pub alpha: Vec<f64>,
    pub gamma: f64,
    pub smoothing_eps: f64,
}

impl Default for FocalLossConfig {
    /// Low / medium / high risk with the medium class up-weighted.
    fn default() -> Self {
        Self {
            alpha: vec![1.0, 3.0, 1.0],
            gamma: 2.0,
            smoothing_eps: 0.1,
        }
    }
}

impl FocalLossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::Config("focal alpha entries must be > 0".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Config("focal gamma must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.smoothing_eps) {
            return Err(Error::Config("label smoothing must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedTarget {
    pub distribution: Vec<f64>,
}

pub fn smooth_labels(class_index: usize, eps: f64, num_classes: usize) -> Result<SmoothedTarget> {
    if num_classes < 2 {
        return Err(Error::contract("label smoothing needs at least two classes"));
    }
    if class_index >= num_classes {
        return Err(Error::contract(format!(
            "class {class_index} out of range for {num_classes} classes"
        )));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::contract(format!("smoothing eps {eps} outside [0, 1)")));
    }
    let floor = eps / num_classes as f64;
    let mut distribution = vec![floor; num_classes];
    distribution[class_index] = (1.0 - eps) + floor;
    Ok(SmoothedTarget { distribution })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grad_logits: Vec<f64>,
}

/// Clamped log-probabilities plus a flag per entry telling whether the clamp
/// was inactive (and therefore whether the entry carries gradient).
fn clamped_log_probs(logits: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let log_p = log_softmax(logits)?;
    let probs: Vec<f64> = log_p.iter().map(|l| l.exp()).collect();
    let floor = LOG_CLAMP.ln();
    let live: Vec<bool> = log_p.iter().map(|&l| l > floor).collect();
    let clamped = log_p.iter().map(|&l| l.max(floor)).collect();
    Ok((clamped, probs, live))
}

/// Focal loss on a smoothed target.
///
/// `loss = -alpha[t] (1 - p_t)^gamma * sum_c y'_c log p_c` where the focusing
/// factor uses the hard class `t` and the log term uses the smoothed target.
pub fn focal_loss(
    logits: &[f64],
    target: &SmoothedTarget,
    target_class: usize,
    cfg: &FocalLossConfig,
) -> Result<LossOutput> {
    let k = logits.len();
    if target.distribution.len() != k || cfg.alpha.len() != k {
        return Err(Error::contract(format!(
            "focal loss dims: logits {k}, target {}, alpha {}",
            target.distribution.len(),
            cfg.alpha.len()
        )));
    }
    if target_class >= k {
        return Err(Error::contract(format!("target class {target_class} >= {k}")));
    }
    let (log_p, p, live) = clamped_log_probs(logits)?;
    let y = &target.distribution;
    let alpha = cfg.alpha[target_class];
    let pt = p[target_class];
    let one_minus = (1.0 - pt).max(0.0);

    let ce: f64 = -y.iter().zip(&log_p).map(|(yc, lp)| yc * lp).sum::<f64>();
    let modulator = if cfg.gamma == 0.0 { 1.0 } else { one_minus.powf(cfg.gamma) };

    // d(-sum y_c log p_c)/dz_j = sum_c y_c [live_c] (p_j - delta_cj)
    let live_mass: f64 = y.iter().zip(&live).filter(|(_, &l)| l).map(|(yc, _)| yc).sum();
    let dce: Vec<f64> = (0..k)
        .map(|j| live_mass * p[j] - if live[j] { y[j] } else { 0.0 })
        .collect();

    // d(1-p_t)^gamma/dz_j = -gamma (1-p_t)^(gamma-1) p_t (delta_tj - p_j)
    let dmod_scale = if cfg.gamma == 0.0 || one_minus == 0.0 {
        0.0
    } else {
        -cfg.gamma * one_minus.powf(cfg.gamma - 1.0) * pt
    };
    let grad_logits = (0..k)
        .map(|j| {
            let delta = if j == target_class { 1.0 } else { 0.0 };
            alpha * (modulator * dce[j] + ce * dmod_scale * (delta - p[j]))
        })
        .collect();
    Ok(LossOutput {
        loss: alpha * modulator * ce,
        grad_logits,
    })
}

/// `-w_y log softmax(logits)[y]`
pub fn weighted_cross_entropy(
    logits: &[f64],
    class_index: usize,
    class_weights: &[f64],
) -> Result<LossOutput> {
    let k = logits.len();
    if class_weights.len() != k {
        return Err(Error::contract(format!(
            "class weights length {} != logits {k}",
            class_weights.len()
        )));
    }
    if class_index >= k {
        return Err(Error::contract(format!("class {class_index} >= {k}")));
    }
    if class_weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::contract("class weights must be > 0"));
    }
    let (log_p, p, live) = clamped_log_probs(logits)?;
    let w = class_weights[class_index];
    let grad_logits = if live[class_index] {
        (0..k)
            .map(|j| w * (p[j] - if j == class_index { 1.0 } else { 0.0 }))
            .collect()
    } else {
        vec![0.0; k]
    };
    Ok(LossOutput {
        loss: -w * log_p[class_index],
        grad_logits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::finite_diff_grad;
    use crate::rng::Rng;

    fn no_smoothing(alpha: Vec<f64>, gamma: f64) -> FocalLossConfig {
        FocalLossConfig {
            alpha,
            gamma,
            smoothing_eps: 0.0,
        }
    }

    #[test]
    fn smoothing_examples() {
        let t = smooth_labels(0, 0.1, 3).unwrap().distribution;
        let want = [0.9 + 0.1 / 3.0, 0.1 / 3.0, 0.1 / 3.0];
        for (a, b) in t.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(smooth_labels(1, 0.0, 3).unwrap().distribution, vec![0.0, 1.0, 0.0]);
        let t = smooth_labels(2, 0.3, 3).unwrap().distribution;
        for (a, b) in t.iter().zip([0.1, 0.1, 0.8]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(smooth_labels(3, 0.1, 3).is_err());
        assert!(smooth_labels(0, 0.1, 1).is_err());
    }

    #[test]
    fn focal_reduces_to_cross_entropy() {
        let t = smooth_labels(0, 0.0, 3).unwrap();
        let out = focal_loss(&[0.0; 3], &t, 0, &no_smoothing(vec![1.0; 3], 0.0)).unwrap();
        assert!((out.loss - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn focal_vanishes_when_confident() {
        let t = smooth_labels(1, 0.0, 3).unwrap();
        let out = focal_loss(&[0.0, 50.0, 0.0], &t, 1, &FocalLossConfig::default()).unwrap();
        assert!(out.loss < 1e-20);
    }

    #[test]
    fn focal_weighting_example() {
        let logits: Vec<f64> = [0.3f64, 0.35, 0.35].iter().map(|p| p.ln()).collect();
        let t = smooth_labels(0, 0.0, 3).unwrap();
        let out = focal_loss(&logits, &t, 0, &no_smoothing(vec![3.0, 1.0, 1.0], 2.0)).unwrap();
        let want = 3.0 * 0.49 * -(0.3f64.ln());
        assert!((out.loss - want).abs() < 1e-12);
        assert!((out.loss - 1.76984).abs() < 1e-4);
    }

    #[test]
    fn weighted_ce_examples() {
        let out = weighted_cross_entropy(&[0.0; 3], 1, &[1.0; 3]).unwrap();
        assert!((out.loss - 3f64.ln()).abs() < 1e-15);
        let doubled = weighted_cross_entropy(&[0.0; 3], 1, &[1.0, 2.0, 1.0]).unwrap();
        assert!((doubled.loss - 2.0 * out.loss).abs() < 1e-15);
        let out = weighted_cross_entropy(&[2.0, 0.0, 0.0], 0, &[1.0; 3]).unwrap();
        let e2 = 2f64.exp();
        assert!((out.loss + (e2 / (e2 + 2.0)).ln()).abs() < 1e-14);
        assert!((out.loss - 0.23955).abs() < 1e-4);
        assert!(weighted_cross_entropy(&[0.0; 3], 0, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = Rng::new(99);
        for trial in 0..200 {
            let logits: Vec<f64> = (0..3).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let class = trial % 3;
            let cfg = FocalLossConfig {
                alpha: vec![1.0, 3.0, 1.5],
                gamma: [0.0, 0.5, 1.0, 2.0, 3.0][trial % 5],
                smoothing_eps: [0.0, 0.1, 0.3][trial % 3],
            };
            let target = smooth_labels(class, cfg.smoothing_eps, 3).unwrap();
            let out = focal_loss(&logits, &target, class, &cfg).unwrap();
            let fd = finite_diff_grad(
                |z| focal_loss(z, &target, class, &cfg).map(|o| o.loss),
                &logits,
                1e-5,
            )
            .unwrap();
            for (a, n) in out.grad_logits.iter().zip(&fd) {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                assert!(rel < 1e-6, "trial {trial}: analytic {a} vs fd {n}");
            }

            let w = [1.0, 2.5, 0.7];
            let ce = weighted_cross_entropy(&logits, class, &w).unwrap();
            let fd = finite_diff_grad(
                |z| weighted_cross_entropy(z, class, &w).map(|o| o.loss),
                &logits,
                1e-5,
            )
            .unwrap();
            for (a, n) in ce.grad_logits.iter().zip(&fd) {
                assert!((a - n).abs() / a.abs().max(n.abs()).max(1e-6) < 1e-6);
            }
        }
    }
}
