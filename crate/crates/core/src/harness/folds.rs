use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Sample indices per fold, ascending.
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldAssignment {
    /// Indices outside fold `i`, ascending.
    pub fn training_indices(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Shuffles each class and deals it round-robin; the dealing cursor carries
/// over between classes so total fold sizes also stay within one.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut rng = Rng::new(seed);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        rng.shuffle(&mut members);
        for i in members {
            folds[cursor].push(i);
            cursor = (cursor + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(FoldAssignment { k, folds, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_division() {
        let labels: Vec<usize> = [vec![0; 10], vec![1; 5], vec![2; 5]].concat();
        let f = stratified_kfold(&labels, 5, 3).unwrap();
        for fold in &f.folds {
            let count = |c| fold.iter().filter(|&&i| labels[i] == c).count();
            assert_eq!((count(0), count(1), count(2)), (2, 1, 1));
        }
        assert!(stratified_kfold(&labels, 1, 3).is_err());
    }
}
