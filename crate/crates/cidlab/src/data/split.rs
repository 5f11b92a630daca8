//! Uniform train/test day splitting without replacement.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("need at least two days to split, got {0}")]
    TooFewDays(usize),
    #[error("train fraction {0} must be strictly between 0 and 1")]
    BadFraction(f64),
}

/// Partitions `days` into train and test sets by drawing
/// `round(fraction * n)` training days uniformly without replacement,
/// clamped so both sides stay nonempty. Original order is preserved within
/// each side; the same seed always produces the same partition.
pub fn split_days<T>(
    days: Vec<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), SplitError> {
    let n = days.len();
    if n < 2 {
        return Err(SplitError::TooFewDays(n));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SplitError::BadFraction(train_fraction));
    }
    let want = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    let mut in_train = vec![false; n];
    for &i in &indices[..want] {
        in_train[i] = true;
    }

    let mut train = Vec::with_capacity(want);
    let mut test = Vec::with_capacity(n - want);
    for (i, day) in days.into_iter().enumerate() {
        if in_train[i] {
            train.push(day);
        } else {
            test.push(day);
        }
    }
    Ok((train, test))
}
