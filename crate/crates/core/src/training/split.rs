//! Scenario-level train/validation/test partitioning.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DramnError, Result};

/// Sample indices of each partition, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions samples so that all samples of one scenario share a partition.
/// `test = round(test_fraction·N)` scenarios and
/// `val = round(val_fraction·(N − test))` of the rest.
pub fn split_dataset(scenario_ids: &[u64], val_fraction: f64, test_fraction: f64, seed: u64) -> Result<Split> {
    let mut ids: Vec<u64> = scenario_ids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let n = ids.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let n_val = (val_fraction * (n - n_test.min(n)) as f64).round() as usize;
    if n_test == 0 || n_val == 0 || n_test + n_val >= n {
        return Err(DramnError::DatasetTooSmall(format!(
            "{n} scenarios cannot fill train/val/test partitions ({n_test} test, {n_val} val)"
        )));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_ids: BTreeSet<u64> = ids[..n_test].iter().copied().collect();
    let val_ids: BTreeSet<u64> = ids[n_test..n_test + n_val].iter().copied().collect();
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (i, id) in scenario_ids.iter().enumerate() {
        if test_ids.contains(id) {
            split.test.push(i);
        } else if val_ids.contains(id) {
            split.val.push(i);
        } else {
            split.train.push(i);
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_scenarios() {
        let ids: Vec<u64> = (0..100).flat_map(|s| std::iter::repeat_n(s, 11)).collect();
        let s = split_dataset(&ids, 0.1, 0.2, 5).unwrap();
        let count = |v: &[usize]| v.iter().map(|&i| ids[i]).collect::<BTreeSet<_>>().len();
        assert_eq!((count(&s.train), count(&s.val), count(&s.test)), (72, 8, 20));
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 1100);
        let train: BTreeSet<u64> = s.train.iter().map(|&i| ids[i]).collect();
        assert!(s.test.iter().all(|&i| !train.contains(&ids[i])));
        assert_eq!(split_dataset(&ids, 0.1, 0.2, 5).unwrap(), s);
        assert_ne!(split_dataset(&ids, 0.1, 0.2, 6).unwrap(), s);
    }

    #[test]
    fn too_small() {
        assert!(split_dataset(&[3, 3, 3], 0.1, 0.2, 0).is_err());
        assert!(split_dataset(&[], 0.1, 0.2, 0).is_err());
    }
}
