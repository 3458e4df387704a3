//! Deterministic dataset splits: stratified k-fold and 60/20/20.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index sets of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold over a continuous target: indices are bucketed
/// into `bins` quantile bins of `targets`, each bin is dealt
/// round-robin onto the k test folds (so fold sizes differ by at most
/// one, globally and per bin), and each fold's remainder is split 9:1
/// into train/validation at random.
pub fn stratified_kfold(
    targets: &[f64],
    k: usize,
    bins: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>> {
    let n = targets.len();
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::Config(format!("{n} samples cannot fill {k} folds")));
    }
    if bins == 0 {
        return Err(Error::Config("need at least one stratification bin".into()));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("stratification target must be finite".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Quantile bins: contiguous chunks of the target-sorted order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        targets[a]
            .partial_cmp(&targets[b])
            .expect("finite targets")
            .then(a.cmp(&b))
    });

    let mut fold_members: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut counter = 0usize;
    for b in 0..bins {
        let lo = b * n / bins;
        let hi = (b + 1) * n / bins;
        let mut bin: Vec<usize> = order[lo..hi].to_vec();
        bin.shuffle(&mut rng);
        for idx in bin {
            fold_members[counter % k].push(idx);
            counter += 1;
        }
    }

    let mut splits = Vec::with_capacity(k);
    for f in 0..k {
        let mut test = fold_members[f].clone();
        test.sort_unstable();
        let mut rest: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
        rest.shuffle(&mut rng);
        let train_n = rest.len() * 9 / 10;
        let mut train = rest[..train_n].to_vec();
        let mut val = rest[train_n..].to_vec();
        train.sort_unstable();
        val.sort_unstable();
        splits.push(FoldSplit { train, val, test });
    }
    Ok(splits)
}

/// Random 60/20/20 train/validation/test split of `0..n`.
pub fn split_60_20_20(n: usize, seed: u64) -> Result<FoldSplit> {
    if n < 5 {
        return Err(Error::Config(format!(
            "60/20/20 split needs at least 5 samples, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train_n = n * 6 / 10;
    let val_n = n * 2 / 10;
    let mut train = order[..train_n].to_vec();
    let mut val = order[train_n..train_n + val_n].to_vec();
    let mut test = order[train_n + val_n..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(FoldSplit { train, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn hundred_samples_ten_folds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let targets: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let splits = stratified_kfold(&targets, 10, 10, 42).unwrap();
        assert_eq!(splits.len(), 10);
        for s in &splits {
            assert_eq!(s.test.len(), 10);
            assert_eq!(s.train.len(), 81);
            assert_eq!(s.val.len(), 9);
        }
    }

    #[test]
    fn test_folds_partition_and_are_disjoint_from_train() {
        let targets: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin()).collect();
        let splits = stratified_kfold(&targets, 5, 10, 7).unwrap();
        let mut seen = vec![0usize; targets.len()];
        for s in &splits {
            for &i in &s.test {
                seen[i] += 1;
                assert!(!s.train.contains(&i));
                assert!(!s.val.contains(&i));
            }
            for &i in &s.train {
                assert!(!s.val.contains(&i));
            }
            assert_eq!(
                s.train.len() + s.val.len() + s.test.len(),
                targets.len(),
                "every sample lands somewhere"
            );
        }
        assert!(seen.iter().all(|&c| c == 1), "test folds partition the data");
        let sizes: Vec<usize> = splits.iter().map(|s| s.test.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn stratification_balances_extremes() {
        // Half low targets, half high: every test fold must contain both.
        let targets: Vec<f64> = (0..40)
            .map(|i| if i < 20 { i as f64 * 0.01 } else { 100.0 + i as f64 })
            .collect();
        for s in stratified_kfold(&targets, 4, 10, 3).unwrap() {
            assert!(s.test.iter().any(|&i| i < 20));
            assert!(s.test.iter().any(|&i| i >= 20));
        }
    }

    #[test]
    fn singleton_folds_and_determinism() {
        let targets: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let a = stratified_kfold(&targets, 10, 10, 5).unwrap();
        assert!(a.iter().all(|s| s.test.len() == 1));
        let b = stratified_kfold(&targets, 10, 10, 5).unwrap();
        assert_eq!(a, b);
        assert!(stratified_kfold(&targets, 11, 10, 5).is_err());
    }

    #[test]
    fn three_way_split_sizes() {
        let s = split_60_20_20(20, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (12, 4, 4));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }
}
