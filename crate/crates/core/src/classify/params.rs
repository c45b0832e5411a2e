use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impurity {
    Gini,
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` picks gini for labels and mse for scores.
    pub impurity: Option<Impurity>,
    /// `None` is unbounded.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            impurity: None,
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbParams {
    pub variance_floor: f64,
    pub standardize: bool,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams {
            variance_floor: 1e-9,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Penalty on the squared slacks.
    pub c: f64,
    /// Half-width of the insensitive tube (regression only).
    pub epsilon: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
    pub standardize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_iter: 1_000_000,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoParams {
    /// Explicit descending grid; `None` builds `n_lambda` geometric points
    /// from the data's lambda_max down to `lambda_max * lambda_min_ratio`.
    pub lambda_grid: Option<Vec<f64>>,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    pub cv_folds: usize,
    pub tol: f64,
    /// Coordinate sweeps allowed per grid point.
    pub max_iter: usize,
    pub standardize: bool,
    /// Seed for the cross-validation folds.
    pub seed: u64,
    /// Stop the path once this fraction of the null deviance is explained.
    pub max_dev_ratio: f64,
}

impl Default for LassoParams {
    fn default() -> Self {
        LassoParams {
            lambda_grid: None,
            n_lambda: 100,
            lambda_min_ratio: 1e-4,
            cv_folds: 10,
            tol: 1e-7,
            max_iter: 10_000,
            standardize: true,
            seed: 0,
            max_dev_ratio: 0.999,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub tree: TreeParams,
    pub nb: NbParams,
    pub svm: SvmParams,
    pub lasso: LassoParams,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.tree.min_leaf < 1 {
            return Err(Error::Config("tree.min_leaf must be at least 1".into()));
        }
        positive("nb.variance_floor", self.nb.variance_floor)?;
        positive("svm.c", self.svm.c)?;
        positive("svm.tol", self.svm.tol)?;
        if self.svm.epsilon.is_nan() || self.svm.epsilon < 0.0 {
            return Err(Error::Config("svm.epsilon must be nonnegative".into()));
        }
        if self.svm.max_iter == 0 || self.lasso.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        positive("lasso.tol", self.lasso.tol)?;
        if self.lasso.cv_folds < 2 {
            return Err(Error::Config("lasso.cv_folds must be at least 2".into()));
        }
        if let Some(grid) = &self.lasso.lambda_grid {
            if grid.is_empty() {
                return Err(Error::Config("lasso.lambda_grid is empty".into()));
            }
            for w in grid.windows(2) {
                if w[1] >= w[0] {
                    return Err(Error::Config("lasso.lambda_grid must be strictly descending".into()));
                }
            }
            for &l in grid {
                positive("lasso.lambda_grid entry", l)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Hyperparams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut hp = Hyperparams::default();
        hp.svm.c = 0.0;
        assert!(hp.validate().is_err());
        let mut hp = Hyperparams::default();
        hp.lasso.lambda_grid = Some(vec![0.1, 0.2]);
        assert!(hp.validate().is_err());
        let mut hp = Hyperparams::default();
        hp.tree.min_leaf = 0;
        assert!(hp.validate().is_err());
    }
}
