use serde::{Deserialize, Serialize};

use super::bag::FeatureBag;
use crate::error::{Error, Result};

/// Per-dimension standardization fitted on instance features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    /// Pools every instance of `bags`. Zero-variance dimensions keep std 1.
    pub fn fit<'a>(bags: impl IntoIterator<Item = &'a FeatureBag>) -> Result<Self> {
        let mut count = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        for bag in bags {
            let d = bag.feature_dim();
            if sum.is_empty() {
                sum = vec![0.0; d];
                sq = vec![0.0; d];
            } else if sum.len() != d {
                return Err(Error::contract("bags disagree on feature dim"));
            }
            for r in 0..bag.n_instances() {
                for (j, &v) in bag.features.row(r).iter().enumerate() {
                    sum[j] += v;
                    sq[j] += v * v;
                }
            }
            count += bag.n_instances();
        }
        if count == 0 {
            return Err(Error::contract("cannot fit a scaler on zero instances"));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let s = (q / n - m * m).max(0.0).sqrt();
                if s > 1e-12 { s } else { 1.0 }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, bag: &mut FeatureBag) -> Result<()> {
        if bag.feature_dim() != self.mean.len() {
            return Err(Error::contract("scaler dim differs from bag dim"));
        }
        for r in 0..bag.n_instances() {
            for (j, v) in bag.features.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseMatrix;

    #[test]
    fn standardizes_to_zero_mean_unit_var() {
        let f = DenseMatrix::from_vec(4, 2, vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0]).unwrap();
        let mut bag = FeatureBag::new("x", 0, vec![(0, 0); 4], f).unwrap();
        let s = FeatureScaler::fit([&bag]).unwrap();
        assert_eq!(s.std[1], 1.0);
        s.apply(&mut bag).unwrap();
        let c0 = bag.features.column(0);
        assert!(c0.iter().sum::<f64>().abs() < 1e-12);
        assert!((c0.iter().map(|v| v * v).sum::<f64>() / 4.0 - 1.0).abs() < 1e-12);
        assert!(bag.features.column(1).iter().all(|&v| v == 0.0));
    }
}
