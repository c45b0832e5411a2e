//! The four model families — decision tree, Gaussian naive Bayes, linear
//! SVM and lasso GLM — in party-label and score-regression form, behind a
//! single [`TrainedModel`] type.
//!
//! Labels are encoded `Democrat = 0`, `Republican = 1` throughout. Feature
//! matrices are dense `ndarray` views with one row per senator-session.

mod lasso;
mod model;
mod naive_bayes;
mod params;
mod standardize;
mod svm;
mod tree;

pub use lasso::{
    coordinate_descent, lambda_grid, lambda_max, lasso_objective, lasso_path, partisan_words,
    train_lasso, CdFit, Link, LassoModel, PathPoint,
};
pub use model::{
    Method, ModelParams, PerPartyLasso, Predictions, Task, TrainedModel, MODEL_FORMAT_VERSION,
};
pub use naive_bayes::{predict_naive_bayes, train_naive_bayes, NbModel};
pub use params::{Hyperparams, Impurity, LassoParams, NbParams, SvmParams, TreeParams};
pub use standardize::Standardizer;
pub use svm::{solve_dual, svm_primal_objective, train_svm, DualProblem, DualSolution, SvmKind, SvmModel};
pub use tree::{train_tree, TreeModel, TreeNode};

/// Training target: binary party labels (0 = D, 1 = R) or real scores.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Labels(&'a [u8]),
    Scores(&'a [f64]),
}

impl Target<'_> {
    pub fn len(&self) -> usize {
        match self {
            Target::Labels(l) => l.len(),
            Target::Scores(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
