use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of `n_items` items to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub n_items: usize,
    pub k: usize,
    pub fold_of: Vec<usize>,
    pub seed: u64,
    pub stratified_by: Option<Vec<u8>>,
}

impl FoldAssignment {
    /// Items in fold `f`, ascending.
    pub fn members(&self, f: usize) -> Vec<usize> {
        (0..self.n_items).filter(|&i| self.fold_of[i] == f).collect()
    }

    /// `(training items, held-out items)` for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.n_items).partition(|&i| self.fold_of[i] != f)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.fold_of {
            s[f] += 1;
        }
        s
    }
}

/// Seeded shuffle, then round-robin assignment. With labels the shuffle is
/// done per class (classes in ascending label order) and the round-robin
/// counter carries over from one class to the next, so both the overall
/// and the per-class fold sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, labels: Option<&[u8]>, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!("{k} folds requested for {n} items")));
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::Config(format!("{} labels for {n} items", l.len())));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut fold_of = vec![0; n];
    let mut counter = 0;
    match labels {
        None => {
            for &i in &order {
                fold_of[i] = counter % k;
                counter += 1;
            }
        }
        Some(l) => {
            let mut classes: Vec<u8> = l.to_vec();
            classes.sort_unstable();
            classes.dedup();
            for c in classes {
                for &i in order.iter().filter(|&&i| l[i] == c) {
                    fold_of[i] = counter % k;
                    counter += 1;
                }
            }
        }
    }
    Ok(FoldAssignment {
        n_items: n,
        k,
        fold_of,
        seed,
        stratified_by: labels.map(<[u8]>::to_vec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_folds() {
        let f = make_folds(10, 10, None, 3).unwrap();
        assert!(f.sizes().iter().all(|&s| s == 1));
    }

    #[test]
    fn stratified_sixty_forty() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i >= 60)).collect();
        let f = make_folds(100, 10, Some(&labels), 11).unwrap();
        for fold in 0..10 {
            let m = f.members(fold);
            let r = m.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!((m.len() - r, r), (6, 4));
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = make_folds(50, 5, None, 9).unwrap();
        assert_eq!(a, make_folds(50, 5, None, 9).unwrap());
        assert_ne!(a.fold_of, make_folds(50, 5, None, 10).unwrap().fold_of);
    }

    #[test]
    fn too_many_folds() {
        assert!(make_folds(3, 4, None, 0).is_err());
        assert!(make_folds(3, 1, None, 0).is_err());
    }
}
