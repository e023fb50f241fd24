use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.65, 0.20, 0.15);

/// Tile-level train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub fractions: (f64, f64, f64),
}

impl SplitAssignment {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Split sizes: floor of each share, with the leftover tiles added to train.
pub fn split_counts(n: usize, fractions: (f64, f64, f64)) -> (usize, usize, usize) {
    let share = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
    let (val, test) = (share(fractions.1), share(fractions.2));
    (n - val - test, val, test)
}

pub fn split(n_tiles: usize, fractions: (f64, f64, f64), seed: u64) -> Result<SplitAssignment> {
    if n_tiles < 3 {
        return Err(Error::TooFewTiles { needed: 3, have: n_tiles });
    }
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("split fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let (n_train, n_val, _) = split_counts(n_tiles, fractions);
    let mut order: Vec<usize> = (0..n_tiles).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitAssignment { train, val, test, seed, fractions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_tiles() {
        assert_eq!(split(100, DEFAULT_FRACTIONS, 1).unwrap().counts(), (65, 20, 15));
    }

    #[test]
    fn remainder_to_train() {
        assert_eq!(split(10, DEFAULT_FRACTIONS, 1).unwrap().counts(), (7, 2, 1));
        assert_eq!(split(4, DEFAULT_FRACTIONS, 1).unwrap().counts(), (4, 0, 0));
    }

    #[test]
    fn bad_fractions() {
        assert!(split(10, (0.5, 0.3, 0.3), 0).is_err());
        assert!(split(2, DEFAULT_FRACTIONS, 0).is_err());
    }
}
