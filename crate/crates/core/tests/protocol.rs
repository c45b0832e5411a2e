//! Fold assignment and cross-validation protocol invariants.

mod common;

use proptest::prelude::*;

use partyline::classify::{Hyperparams, Method, Task};
use partyline::eval::{make_folds, run_accuracy_matrix, EvalData, LeakageTracker, MatrixOptions};
use partyline::synth::{generate, SynthParams};
use partyline::textprep::{build_vocabulary, count_stems, to_doc_term_matrix, CleanConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn plain_folds_partition(n in 2usize..300, k in 2usize..20, seed: u64) {
        prop_assume!(k <= n);
        let folds = make_folds(n, k, None, seed).unwrap();
        prop_assert_eq!(common::fold_violation(&folds, n, k, None), None);
    }

    #[test]
    fn stratified_folds_partition(labels in proptest::collection::vec(0u8..2, 2..300), k in 2usize..20, seed: u64) {
        prop_assume!(k <= labels.len());
        let folds = make_folds(labels.len(), k, Some(&labels), seed).unwrap();
        prop_assert_eq!(common::fold_violation(&folds, labels.len(), k, Some(&labels)), None);
        prop_assert_eq!(folds, make_folds(labels.len(), k, Some(&labels), seed).unwrap());
    }
}

#[test]
fn fold_arguments_are_checked() {
    assert!(make_folds(5, 1, None, 0).is_err());
    assert!(make_folds(5, 6, None, 0).is_err());
}

fn small_synthetic() -> EvalData {
    let corpus = generate(&SynthParams {
        sessions: 3,
        senators_per_session: 30,
        vocab_size: 80,
        planted: 6,
        doc_len_min: 300,
        doc_len_max: 600,
        ..Default::default()
    })
    .unwrap();
    let counts = count_stems(corpus.sessions.iter().map(|s| s.token_stems.as_slice()));
    let vocab = build_vocabulary(
        &counts,
        &CleanConfig {
            min_stem_count: 1,
            ..Default::default()
        },
    );
    let (dtm, _) = to_doc_term_matrix(&corpus.sessions, &vocab);
    EvalData::from_dtm(&dtm, false)
}

#[test]
fn no_item_scored_by_its_own_sub_model() {
    let data = small_synthetic();
    let tracker = LeakageTracker::new();
    let options = MatrixOptions {
        sessions: vec![104, 105, 106],
        folds: 5,
        seed: 3,
        threads: 2,
    };
    for (m, t) in [(Method::Tree, Task::Party), (Method::Nb, Task::Party), (Method::Svm, Task::Dwn1)] {
        run_accuracy_matrix(m, t, &data, &Hyperparams::default(), &options, Some(&tracker)).unwrap();
    }
    assert!(tracker.scored() > 0);
    assert_eq!(tracker.violations(), 0);
}

#[test]
fn thread_count_never_changes_the_grid() {
    let data = small_synthetic();
    let mut options = MatrixOptions {
        sessions: vec![104, 105, 106],
        folds: 4,
        seed: 11,
        threads: 1,
    };
    let hp = Hyperparams::default();
    for m in [Method::Tree, Method::Svm] {
        let one = run_accuracy_matrix(m, Task::Party, &data, &hp, &options, None).unwrap().matrix;
        options.threads = 4;
        let four = run_accuracy_matrix(m, Task::Party, &data, &hp, &options, None).unwrap().matrix;
        options.threads = 1;
        assert_eq!(one.to_tsv(), four.to_tsv());
    }
}

#[test]
fn excluded_combination_is_refused() {
    let data = small_synthetic();
    let options = MatrixOptions {
        sessions: vec![104],
        folds: 3,
        seed: 0,
        threads: 1,
    };
    let err = run_accuracy_matrix(Method::Nb, Task::Dwn1, &data, &Hyperparams::default(), &options, None).unwrap_err();
    assert!(err.to_string().contains("combination excluded"), "{err}");
}
