//! Fold assignment, the within-sample and out-of-sample protocols, the
//! train-session × test-session accuracy grid, and diagnostics computed
//! over finished grids.

mod diagnostics;
mod folds;
mod matrix;
mod protocol;

pub use diagnostics::{
    backwards_count, drift_stddev, lasso_within_adjustment, midpoint_classifier_accuracy,
    threshold_validate, BackwardsCount, BackwardsScope, DiagnosticsReport, MidpointRule,
};
pub use folds::{make_folds, FoldAssignment};
pub use matrix::{
    build_accuracy_matrix, row_seed, run_accuracy_matrix, AxisLabel, EvalData, EvalMatrix,
    MatrixOptions, MatrixRun,
};
pub use protocol::{
    accuracy, out_of_sample_accuracy, splitmix64, within_sample_accuracy, FittedRow,
    LeakageTracker, TrainingSet,
};
