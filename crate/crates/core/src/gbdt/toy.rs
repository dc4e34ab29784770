//! Small deterministic three-class table with 23 columns for exercising the trees.

use crate::nn::DenseMatrix;
use crate::rng::Rng;

pub const TOY_SEED: u64 = 23;

/// 90 rows, 30 per class. Columns 2 and 9 carry overlapping class signal;
/// the rest are uniform noise.
pub fn toy_dataset() -> (DenseMatrix, Vec<usize>) {
    let mut rng = Rng::new(TOY_SEED);
    let m = 90;
    let mut x = DenseMatrix::zeros(m, super::ENHANCED_DIM);
    let mut y = Vec::with_capacity(m);
    for i in 0..m {
        let c = i % 3;
        for j in 0..super::ENHANCED_DIM {
            x.set(i, j, rng.next_f64());
        }
        x.set(i, 2, c as f64 + rng.uniform(-0.7, 0.7));
        x.set(i, 9, (c as f64 - 1.0).abs() + rng.uniform(-0.4, 0.4));
        y.push(c);
    }
    (x, y)
}
