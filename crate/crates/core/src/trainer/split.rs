use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Seeded Fisher–Yates shuffle, then the first `floor(ratio · N)` items
/// become the training set and the rest the test set.
pub fn split_dataset<S>(items: Vec<S>, ratio: f64, seed: u64) -> Result<(Vec<S>, Vec<S>)> {
    if items.is_empty() {
        return Err(Error::Domain("cannot split an empty dataset".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let mut items = items;
    items.shuffle(&mut SplitMix64::new(seed));
    let cut = (ratio * items.len() as f64).floor() as usize;
    let test = items.split_off(cut);
    Ok((items, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_split_counts() {
        let (train, test) = split_dataset((0..150).collect(), 0.8, 42).unwrap();
        assert_eq!((train.len(), test.len()), (120, 30));
        let (train, test) = split_dataset((0..94).collect(), 0.8, 42).unwrap();
        assert_eq!((train.len(), test.len()), (75, 19));
    }

    #[test]
    fn floor_rule() {
        let (train, test) = split_dataset((0..5).collect::<Vec<_>>(), 0.5, 1).unwrap();
        assert_eq!((train.len(), test.len()), (2, 3));
    }

    #[test]
    fn deterministic_and_shuffled() {
        let a = split_dataset((0..50).collect::<Vec<_>>(), 0.8, 9).unwrap();
        let b = split_dataset((0..50).collect::<Vec<_>>(), 0.8, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn errors() {
        assert!(split_dataset(Vec::<u8>::new(), 0.8, 0).is_err());
        assert!(split_dataset(vec![1], 1.0, 0).is_err());
        assert!(split_dataset(vec![1], 0.0, 0).is_err());
    }
}
