use num_bigint::BigInt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OtsuThreshold {
    /// Foreground is `value > threshold`.
    pub threshold: u8,
    /// All mass sat in a single bin; `threshold` is that bin.
    pub degenerate: bool,
}

pub fn histogram(values: &[u8]) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &v in values {
        h[v as usize] += 1;
    }
    h
}

/// Threshold maximising between-class variance with classes `≤ t` and `> t`.
///
/// For a split with weights `w0, w1` and first moments `s0, s1` the
/// between-class variance is proportional to `(s0·w1 − s1·w0)² / (w0·w1)`;
/// candidates are compared exactly by cross-multiplying in big integers, and
/// the smallest maximising `t` wins.
pub fn otsu_threshold(hist: &[u64; 256]) -> Result<OtsuThreshold> {
    let total: u128 = hist.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return Err(Error::contract("Otsu threshold of an empty histogram"));
    }
    let moment: u128 = hist.iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();
    let mut best: Option<(usize, BigInt, BigInt)> = None;
    let (mut w0, mut s0) = (0u128, 0u128);
    for (t, &c) in hist.iter().enumerate() {
        w0 += c as u128;
        s0 += t as u128 * c as u128;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let s1 = moment - s0;
        let diff = BigInt::from(s0) * BigInt::from(w1) - BigInt::from(s1) * BigInt::from(w0);
        let num = &diff * &diff;
        let den = BigInt::from(w0) * BigInt::from(w1);
        let better = match &best {
            None => true,
            Some((_, bn, bd)) => &num * bd > bn * &den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    Ok(match best {
        Some((t, _, _)) => OtsuThreshold {
            threshold: t as u8,
            degenerate: false,
        },
        None => OtsuThreshold {
            threshold: hist.iter().position(|&c| c > 0).unwrap() as u8,
            degenerate: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_is_degenerate() {
        let mut h = [0u64; 256];
        h[77] = 40;
        let t = otsu_threshold(&h).unwrap();
        assert_eq!(t, OtsuThreshold { threshold: 77, degenerate: true });
    }

    #[test]
    fn two_spikes_pick_smallest_tie() {
        let mut h = [0u64; 256];
        h[50] = 100;
        h[200] = 100;
        assert_eq!(otsu_threshold(&h).unwrap().threshold, 50);
    }

    #[test]
    fn empty_histogram_is_an_error() {
        assert!(otsu_threshold(&[0; 256]).is_err());
    }

    #[test]
    fn histogram_counts() {
        let h = histogram(&[0, 0, 255, 3]);
        assert_eq!((h[0], h[3], h[255]), (2, 1, 1));
    }
}
