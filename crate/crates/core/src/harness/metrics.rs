use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::argmax;

pub const N_CLASSES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `confusion[truth][predicted]`.
    pub confusion: [[usize; N_CLASSES]; N_CLASSES],
    pub accuracy: f64,
    pub precision: [f64; N_CLASSES],
    pub recall: [f64; N_CLASSES],
    pub f1: [f64; N_CLASSES],
    pub macro_f1: f64,
    /// Absent when no class has both positives and negatives.
    pub auc_macro_ovr: Option<f64>,
    pub n_samples: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    /// Everything except AUC, which needs scores.
    pub fn from_confusion(confusion: [[usize; N_CLASSES]; N_CLASSES]) -> Self {
        let n: usize = confusion.iter().flatten().sum();
        let trace: usize = (0..N_CLASSES).map(|c| confusion[c][c]).sum();
        let mut precision = [0.0; N_CLASSES];
        let mut recall = [0.0; N_CLASSES];
        let mut f1 = [0.0; N_CLASSES];
        for c in 0..N_CLASSES {
            let tp = confusion[c][c];
            let predicted: usize = (0..N_CLASSES).map(|t| confusion[t][c]).sum();
            let actual: usize = confusion[c].iter().sum();
            precision[c] = ratio(tp, predicted);
            recall[c] = ratio(tp, actual);
            f1[c] = ratio(2 * tp, predicted + actual);
        }
        Self {
            confusion,
            accuracy: ratio(trace, n),
            precision,
            recall,
            f1,
            macro_f1: f1.iter().sum::<f64>() / N_CLASSES as f64,
            auc_macro_ovr: None,
            n_samples: n,
        }
    }
}

pub fn evaluate_metrics(probs: &[Vec<f64>], labels: &[usize]) -> Result<MetricsReport> {
    if probs.is_empty() || probs.len() != labels.len() {
        return Err(Error::contract(format!("{} predictions for {} labels", probs.len(), labels.len())));
    }
    let mut confusion = [[0usize; N_CLASSES]; N_CLASSES];
    for (p, &y) in probs.iter().zip(labels) {
        if p.len() != N_CLASSES || y >= N_CLASSES {
            return Err(Error::contract("metrics expect three-class probabilities and labels"));
        }
        confusion[y][argmax(p)] += 1;
    }
    let mut report = MetricsReport::from_confusion(confusion);
    report.auc_macro_ovr = roc_auc_macro_ovr(probs, labels).ok();
    Ok(report)
}

/// Mann–Whitney AUC of `scores` for `positive` flags, ties credited 0.5.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average 1-based ranks over tie groups.
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let rank_sum: f64 = (0..n).filter(|&i| positive[i]).map(|i| ranks[i]).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Mean one-vs-rest AUC over classes that have both positives and negatives.
pub fn roc_auc_macro_ovr(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let k = probs.first().map_or(0, Vec::len);
    let mut scored = Vec::new();
    for c in 0..k {
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        if let Some(a) = binary_auc(&scores, &pos) {
            scored.push(a);
        }
    }
    if scored.is_empty() {
        return Err(Error::Numeric("no class has both positives and negatives; AUC undefined".into()));
    }
    Ok(scored.iter().sum::<f64>() / scored.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_credit() {
        let a = binary_auc(&[0.9, 0.5, 0.5, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(a, 0.875);
    }

    #[test]
    fn all_correct() {
        let probs = vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]];
        let r = evaluate_metrics(&probs, &[0, 1, 2]).unwrap();
        assert_eq!((r.accuracy, r.macro_f1, r.auc_macro_ovr), (1.0, 1.0, Some(1.0)));
    }

    #[test]
    fn absent_class_scores_zero_f1() {
        let probs = vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1]];
        let r = evaluate_metrics(&probs, &[0, 1]).unwrap();
        assert_eq!(r.f1, [1.0, 1.0, 0.0]);
        assert!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
    }
}
