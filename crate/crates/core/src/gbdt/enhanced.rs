//! The 23-value slide descriptor fed to the boosted trees.

use crate::error::{Error, Result};
use crate::mil::ForwardOutput;

pub const ENHANCED_DIM: usize = 23;

pub const ENHANCED_FEATURE_NAMES: [&str; ENHANCED_DIM] = [
    "logit_0",
    "logit_1",
    "logit_2",
    "prob_0",
    "prob_1",
    "prob_2",
    "log1p_patch_count",
    "attn_mean",
    "attn_std",
    "attn_min",
    "attn_max",
    "attn_median",
    "attn_skewness",
    "attn_excess_kurtosis",
    "attn_entropy",
    "attn_normalized_entropy",
    "attn_top1",
    "attn_top5_mass",
    "attn_top10_mass",
    "attn_gini",
    "attn_q25",
    "attn_q75",
    "attn_iqr",
];

/// Moments below this std are treated as a constant distribution.
const FLAT_STD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct EnhancedFeatures(pub [f64; ENHANCED_DIM]);

impl EnhancedFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Linear interpolation between order statistics of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Gini coefficient of non-negative weights: `Σ (2i − n − 1)·a₍ᵢ₎ / (n·Σa)`.
pub fn gini(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let acc: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &a)| (2.0 * (i + 1) as f64 - n - 1.0) * a)
        .sum();
    (acc / (n * total)).max(0.0)
}

pub fn build_enhanced_features(logits: &[f64], probs: &[f64], attention: &[f64]) -> Result<EnhancedFeatures> {
    if logits.len() != 3 || probs.len() != 3 {
        return Err(Error::contract("enhanced features expect three logits and probabilities"));
    }
    let n = attention.len();
    if n == 0 {
        return Err(Error::contract("attention over zero instances"));
    }
    if attention.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::contract("attention weights must be finite and non-negative"));
    }
    let total: f64 = attention.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::contract(format!("attention sums to {total}, expected 1")));
    }
    let nf = n as f64;
    let mut sorted = attention.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mean = total / nf;
    let m2 = attention.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / nf;
    let std = m2.sqrt();
    let (skew, kurt) = if std < FLAT_STD {
        (0.0, 0.0)
    } else {
        let m3 = attention.iter().map(|a| (a - mean).powi(3)).sum::<f64>() / nf;
        let m4 = attention.iter().map(|a| (a - mean).powi(4)).sum::<f64>() / nf;
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    let entropy: f64 = -attention.iter().filter(|&&a| a > 0.0).map(|a| a * a.ln()).sum::<f64>();
    let norm_entropy = if n == 1 { 0.0 } else { entropy / nf.ln() };
    let top_mass = |k: usize| sorted.iter().rev().take(k).sum::<f64>();
    let q25 = quantile_sorted(&sorted, 0.25);
    let q75 = quantile_sorted(&sorted, 0.75);

    let mut out = [0.0; ENHANCED_DIM];
    out[..3].copy_from_slice(logits);
    out[3..6].copy_from_slice(probs);
    out[6] = (1.0 + nf).ln();
    out[7] = mean;
    out[8] = std;
    out[9] = sorted[0];
    out[10] = sorted[n - 1];
    out[11] = quantile_sorted(&sorted, 0.5);
    out[12] = skew;
    out[13] = kurt;
    out[14] = entropy;
    out[15] = norm_entropy;
    out[16] = sorted[n - 1];
    out[17] = top_mass(5);
    out[18] = top_mass(10);
    out[19] = gini(&sorted);
    out[20] = q25;
    out[21] = q75;
    out[22] = q75 - q25;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite enhanced feature".into()));
    }
    Ok(EnhancedFeatures(out))
}

/// Features from a model forward pass; ABMIL uses the predicted class's attention row.
pub fn enhanced_from_forward(fwd: &ForwardOutput) -> Result<EnhancedFeatures> {
    build_enhanced_features(fwd.logits(), &fwd.probabilities(), &fwd.attention(None)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_attention_closed_forms() {
        let a = vec![0.01; 100];
        let f = build_enhanced_features(&[0.0; 3], &[1.0 / 3.0; 3], &a).unwrap().0;
        assert!((f[14] - 100f64.ln()).abs() < 1e-6);
        assert!((f[15] - 1.0).abs() < 1e-6);
        assert!(f[19].abs() < 1e-6);
        assert!((f[16] - 0.01).abs() < 1e-12);
        assert_eq!((f[12], f[13]), (0.0, 0.0));
    }

    #[test]
    fn small_bags_cap_top_mass() {
        let f = build_enhanced_features(&[0.0; 3], &[1.0 / 3.0; 3], &[0.2, 0.3, 0.5]).unwrap().0;
        assert!((f[17] - 1.0).abs() < 1e-15 && (f[18] - 1.0).abs() < 1e-15);
        assert_eq!(f[11], 0.3);
        assert!((f[20] - 0.25).abs() < 1e-15 && (f[21] - 0.4).abs() < 1e-15);
        let single = build_enhanced_features(&[0.0; 3], &[1.0 / 3.0; 3], &[1.0]).unwrap().0;
        assert_eq!(single[15], 0.0);
    }

    #[test]
    fn unnormalized_attention_rejected() {
        assert!(build_enhanced_features(&[0.0; 3], &[1.0 / 3.0; 3], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn gini_of_point_mass() {
        // All mass on one of n items: (n-1)/n.
        assert!((gini(&[0.0, 0.0, 0.0, 1.0]) - 0.75).abs() < 1e-15);
    }
}
