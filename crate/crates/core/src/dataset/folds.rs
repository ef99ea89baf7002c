//! Stratified k-fold splits with a stratified validation holdout.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    /// Panics if any index is shared between the three splits.
    pub fn assert_isolated(&self) {
        let mut all: Vec<usize> = self.train.iter().chain(&self.val).chain(&self.test).copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n, "fold splits overlap");
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

fn by_class(labels: &[usize]) -> Vec<Vec<usize>> {
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut classes = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        classes[l].push(i);
    }
    classes
}

/// `stratified_kfold`. Each class is shuffled and dealt round-robin across
/// folds, continuing where the previous class stopped, so fold sizes differ by
/// at most one. Within each training portion, `round(val_fraction · n_c)`
/// members of every class `c` are held out for validation.
pub fn stratified_kfold(labels: &[usize], k: usize, val_fraction: f64, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Config(format!("validation fraction {val_fraction} outside [0, 1)")));
    }
    let classes = by_class(labels);
    for (class, members) in classes.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::Stratification {
                class,
                count: members.len(),
                folds: k,
            });
        }
    }
    let mut rng = rng::seeded(seed);
    let mut test: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for members in &classes {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for idx in shuffled {
            test[cursor % k].push(idx);
            cursor += 1;
        }
    }

    let mut folds = Vec::with_capacity(k);
    for (f, test_idx) in test.iter().enumerate() {
        let mut in_test = vec![false; labels.len()];
        test_idx.iter().for_each(|&i| in_test[i] = true);
        let mut val_rng = rng::stream(seed, f as u64 + 1);
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for members in &classes {
            let mut pool: Vec<usize> = members.iter().copied().filter(|&i| !in_test[i]).collect();
            pool.shuffle(&mut val_rng);
            let n_val = (val_fraction * pool.len() as f64).round() as usize;
            val.extend_from_slice(&pool[..n_val]);
            train.extend_from_slice(&pool[n_val..]);
        }
        let mut test_sorted = test_idx.clone();
        train.sort_unstable();
        val.sort_unstable();
        test_sorted.sort_unstable();
        let fold = Fold {
            train,
            val,
            test: test_sorted,
        };
        fold.assert_isolated();
        folds.push(fold);
    }
    Ok(FoldPlan {
        k,
        val_fraction,
        seed,
        folds,
    })
}
