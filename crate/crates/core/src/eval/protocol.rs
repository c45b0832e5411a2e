//! Within-sample and out-of-sample accuracy.
//!
//! Tree, naive Bayes and SVM are scored by k-fold cross-validation: each
//! sub-model predicts only its own held-out fold, and its out-of-sample
//! score on another session is the mean over sub-models. The lasso instead
//! uses cross-validation only to choose λ and then fits a single model on
//! every row, so its within-sample figure is resubstitution accuracy.

use std::sync::atomic::{AtomicUsize, Ordering};

use ndarray::{ArrayView2, Axis};

use super::folds::make_folds;
use crate::classify::{Hyperparams, Method, Predictions, Target, Task, TrainedModel};
use crate::error::{Error, Result};

/// Counts scoring events and flags any in which a cross-validation
/// sub-model scores an item it was trained on.
#[derive(Debug, Default)]
pub struct LeakageTracker {
    scored: AtomicUsize,
    violations: AtomicUsize,
}

impl LeakageTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// `train` must be sorted.
    pub fn record(&self, train: &[usize], item: usize) {
        self.scored.fetch_add(1, Ordering::Relaxed);
        if train.binary_search(&item).is_ok() {
            self.violations.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn scored(&self) -> usize {
        self.scored.load(Ordering::Relaxed)
    }

    pub fn violations(&self) -> usize {
        self.violations.load(Ordering::Relaxed)
    }
}

/// Rows a trainer sees: features, party labels (0 = D, 1 = R) and, for
/// the score task, ideology scores.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    pub x: ArrayView2<'a, f64>,
    pub parties: &'a [u8],
    pub scores: Option<&'a [f64]>,
}

impl<'a> TrainingSet<'a> {
    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    fn target(&self, task: Task) -> Result<Target<'a>> {
        match task {
            Task::Party => Ok(Target::Labels(self.parties)),
            Task::Dwn1 => self
                .scores
                .map(Target::Scores)
                .ok_or_else(|| Error::Data("ideology scores are required for the dwn1 task".into())),
        }
    }
}

/// Models fitted for one training set plus its within-sample accuracy.
#[derive(Debug, Clone)]
pub struct FittedRow {
    /// `k` cross-validation sub-models, or the single lasso model.
    pub models: Vec<TrainedModel>,
    pub within: f64,
    /// Fold seed actually used (after a possible retry).
    pub seed: u64,
}

/// Fraction of predictions matching `parties`; scores count as Republican
/// at zero or above.
pub fn accuracy(pred: &Predictions, parties: &[u8]) -> f64 {
    let labels = pred.party_labels();
    let hits = labels.iter().zip(parties).filter(|(a, b)| a == b).count();
    hits as f64 / parties.len() as f64
}

fn has_both(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

/// Fits and scores one training set with `k`-fold cross-validation (the
/// lasso uses its own `cv_folds` for choosing λ). A fold split that leaves some
/// training part without both parties is retried once with a fresh seed.
#[allow(clippy::too_many_arguments)]
pub fn within_sample_accuracy(
    method: Method,
    task: Task,
    set: &TrainingSet<'_>,
    hp: &Hyperparams,
    k: usize,
    seed: u64,
    fingerprint: u64,
    tracker: Option<&LeakageTracker>,
) -> Result<FittedRow> {
    if set.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if !has_both(set.parties) {
        return Err(Error::Training("training set lacks one of the parties".into()));
    }
    let target = set.target(task)?;

    if method == Method::Lasso {
        let mut hp = hp.clone();
        hp.lasso.seed = seed;
        let model = TrainedModel::train(method, task, set.x, target, &hp, fingerprint)?;
        let within = accuracy(&model.predict(set.x)?, set.parties);
        return Ok(FittedRow {
            models: vec![model],
            within,
            seed,
        });
    }

    let mut attempt_seed = seed;
    for attempt in 0..2 {
        let folds = make_folds(set.len(), k, Some(set.parties), attempt_seed)?;
        let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k).map(|f| folds.split(f)).collect();
        let degenerate = splits.iter().any(|(train, _)| {
            let l: Vec<u8> = train.iter().map(|&i| set.parties[i]).collect();
            !has_both(&l)
        });
        if degenerate {
            if attempt == 0 {
                log::warn!("a training fold lost a party; retrying with a new seed");
                attempt_seed = splitmix64(attempt_seed ^ 0x5eed);
                continue;
            }
            return Err(Error::Training("a training fold lacks one of the parties after reseeding".into()));
        }

        let mut models = Vec::with_capacity(k);
        let mut correct = 0usize;
        for (train, test) in &splits {
            let xt = set.x.select(Axis(0), train);
            let sub_labels: Vec<u8>;
            let sub_scores: Vec<f64>;
            let sub_target = match target {
                Target::Labels(l) => {
                    sub_labels = train.iter().map(|&i| l[i]).collect();
                    Target::Labels(&sub_labels)
                }
                Target::Scores(s) => {
                    sub_scores = train.iter().map(|&i| s[i]).collect();
                    Target::Scores(&sub_scores)
                }
            };
            let model = TrainedModel::train(method, task, xt.view(), sub_target, hp, fingerprint)?;
            let xh = set.x.select(Axis(0), test);
            let pred = model.predict(xh.view())?.party_labels();
            for (&i, &p) in test.iter().zip(&pred) {
                if let Some(t) = tracker {
                    t.record(train, i);
                }
                if p == set.parties[i] {
                    correct += 1;
                }
            }
            models.push(model);
        }
        return Ok(FittedRow {
            models,
            within: correct as f64 / set.len() as f64,
            seed: attempt_seed,
        });
    }
    unreachable!("loop returns on its second attempt")
}

/// Mean accuracy of the sub-models on `x` (a single lasso model is just
/// its own accuracy).
pub fn out_of_sample_accuracy(models: &[TrainedModel], x: ArrayView2<'_, f64>, parties: &[u8]) -> Result<f64> {
    if parties.is_empty() {
        return Err(Error::Data("empty test set".into()));
    }
    if models.is_empty() {
        return Err(Error::Training("no models to evaluate".into()));
    }
    let mut total = 0.0;
    for m in models {
        total += accuracy(&m.predict(x)?, parties);
    }
    Ok(total / models.len() as f64)
}

/// The splitmix64 finalizer, used to derive independent seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
