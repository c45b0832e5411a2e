use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::lasso::{train_lasso, LassoModel, Link};
use super::naive_bayes::{predict_naive_bayes, train_naive_bayes, NbModel};
use super::params::Hyperparams;
use super::svm::{train_svm, SvmModel};
use super::tree::{train_tree, TreeModel};
use super::Target;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tree,
    Nb,
    Svm,
    Lasso,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Tree, Method::Nb, Method::Svm, Method::Lasso];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tree => "tree",
            Method::Nb => "nb",
            Method::Svm => "svm",
            Method::Lasso => "lasso",
        }
    }

    /// Naive Bayes has no ideology-score analogue.
    pub fn supports(self, task: Task) -> bool {
        !(self == Method::Nb && task == Task::Dwn1)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tree" => Ok(Method::Tree),
            "nb" | "naive_bayes" | "naivebayes" => Ok(Method::Nb),
            "svm" => Ok(Method::Svm),
            "lasso" => Ok(Method::Lasso),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Party,
    Dwn1,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Party => "party",
            Task::Dwn1 => "dwn1",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "party" => Ok(Task::Party),
            "dwn1" => Ok(Task::Dwn1),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

/// Separate score models for each party, routed by the sign of a pooled
/// fit: a row the pooled model scores below zero goes to the Democratic
/// model, everything else to the Republican one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPartyLasso {
    pub pooled: LassoModel,
    pub democrat: LassoModel,
    pub republican: LassoModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Tree(TreeModel),
    NaiveBayes(NbModel),
    Svm(SvmModel),
    Lasso(LassoModel),
    LassoPerParty(PerPartyLasso),
}

impl ModelParams {
    pub fn model_type(&self) -> &'static str {
        match self {
            ModelParams::Tree(_) => "tree",
            ModelParams::NaiveBayes(_) => "nb",
            ModelParams::Svm(_) => "svm",
            ModelParams::Lasso(_) => "lasso",
            ModelParams::LassoPerParty(_) => "lasso_per_party",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    /// 0 = Democrat, 1 = Republican.
    Labels(Vec<u8>),
    Scores(Vec<f64>),
}

impl Predictions {
    /// Party labels; scores are thresholded at zero with zero going to
    /// Republican.
    pub fn party_labels(&self) -> Vec<u8> {
        match self {
            Predictions::Labels(l) => l.clone(),
            Predictions::Scores(s) => s.iter().map(|&v| u8::from(v >= 0.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub task: Task,
    pub vocab_fingerprint: u64,
    pub n_features: usize,
    pub hyperparams: Hyperparams,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    model_type: String,
    task: Task,
    vocab_fingerprint: String,
    n_features: usize,
    hyperparams: Hyperparams,
    parameters: ModelParams,
}

impl TrainedModel {
    /// Trains `method` on `x`. The party task takes labels, the score task
    /// takes scores; naive Bayes refuses the score task.
    pub fn train(
        method: Method,
        task: Task,
        x: ArrayView2<'_, f64>,
        target: Target<'_>,
        hp: &Hyperparams,
        vocab_fingerprint: u64,
    ) -> Result<Self> {
        if !method.supports(task) {
            return Err(Error::Excluded(
                "naive Bayes has no ideology-score analogue".into(),
            ));
        }
        match (task, target) {
            (Task::Party, Target::Labels(_)) | (Task::Dwn1, Target::Scores(_)) => {}
            _ => return Err(Error::Config(format!("target kind does not match task {task}"))),
        }
        let params = match method {
            Method::Tree => ModelParams::Tree(train_tree(x, target, &hp.tree)?),
            Method::Nb => {
                let Target::Labels(l) = target else { unreachable!() };
                ModelParams::NaiveBayes(train_naive_bayes(x, l, &hp.nb)?)
            }
            Method::Svm => ModelParams::Svm(train_svm(x, target, &hp.svm)?),
            Method::Lasso => {
                let link = match task {
                    Task::Party => Link::Logit,
                    Task::Dwn1 => Link::Identity,
                };
                ModelParams::Lasso(train_lasso(x, target, link, &hp.lasso)?)
            }
        };
        Ok(TrainedModel {
            task,
            vocab_fingerprint,
            n_features: x.ncols(),
            hyperparams: hp.clone(),
            params,
        })
    }

    /// Score-task lasso fitted separately to each party's rows.
    pub fn train_lasso_per_party(
        x: ArrayView2<'_, f64>,
        scores: &[f64],
        parties: &[u8],
        hp: &Hyperparams,
        vocab_fingerprint: u64,
    ) -> Result<Self> {
        if parties.len() != x.nrows() || scores.len() != x.nrows() {
            return Err(Error::Training("scores, parties and rows differ in length".into()));
        }
        let pooled = train_lasso(x, Target::Scores(scores), Link::Identity, &hp.lasso)?;
        let fit_party = |p: u8| -> Result<LassoModel> {
            let idx: Vec<usize> = (0..parties.len()).filter(|&i| parties[i] == p).collect();
            if idx.len() < 2 {
                return Err(Error::Training(format!("party {p} has fewer than 2 rows")));
            }
            let xs = x.select(ndarray::Axis(0), &idx);
            let ys: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            train_lasso(xs.view(), Target::Scores(&ys), Link::Identity, &hp.lasso)
        };
        let democrat = fit_party(0)?;
        let republican = fit_party(1)?;
        Ok(TrainedModel {
            task: Task::Dwn1,
            vocab_fingerprint,
            n_features: x.ncols(),
            hyperparams: hp.clone(),
            params: ModelParams::LassoPerParty(PerPartyLasso {
                pooled,
                democrat,
                republican,
            }),
        })
    }

    pub fn method(&self) -> Method {
        match self.params {
            ModelParams::Tree(_) => Method::Tree,
            ModelParams::NaiveBayes(_) => Method::Nb,
            ModelParams::Svm(_) => Method::Svm,
            ModelParams::Lasso(_) | ModelParams::LassoPerParty(_) => Method::Lasso,
        }
    }

    /// Checks the column space, then predicts every row.
    pub fn predict_checked(&self, x: ArrayView2<'_, f64>, vocab_fingerprint: u64) -> Result<Predictions> {
        if vocab_fingerprint != self.vocab_fingerprint {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.ncols(),
                fingerprint: self.vocab_fingerprint,
            });
        }
        self.predict(x)
    }

    /// Party labels for the party task, scores for the score task. Decision
    /// ties (SVM margin 0, lasso probability ½, tree leaf tie) go to
    /// Republican.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Predictions> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.ncols(),
                fingerprint: self.vocab_fingerprint,
            });
        }
        let rows = x.rows().into_iter();
        let classify = self.task == Task::Party;
        Ok(match &self.params {
            ModelParams::Tree(t) => {
                let vals: Vec<f64> = rows.map(|r| t.predict_row(&r.to_vec())).collect();
                if classify {
                    Predictions::Labels(vals.iter().map(|&v| u8::from(v >= 0.5)).collect())
                } else {
                    Predictions::Scores(vals)
                }
            }
            ModelParams::NaiveBayes(m) => Predictions::Labels(rows.map(|r| predict_naive_bayes(m, r).0).collect()),
            ModelParams::Svm(m) => {
                let f: Vec<f64> = rows.map(|r| m.decision(r)).collect();
                if classify {
                    Predictions::Labels(f.iter().map(|&v| u8::from(v >= 0.0)).collect())
                } else {
                    Predictions::Scores(f)
                }
            }
            ModelParams::Lasso(m) => {
                let eta: Vec<f64> = rows.map(|r| m.linear_predictor(r)).collect();
                if classify {
                    Predictions::Labels(eta.iter().map(|&v| u8::from(v >= 0.0)).collect())
                } else {
                    Predictions::Scores(eta)
                }
            }
            ModelParams::LassoPerParty(m) => Predictions::Scores(
                rows.map(|r| {
                    if m.pooled.linear_predictor(r) < 0.0 {
                        m.democrat.linear_predictor(r)
                    } else {
                        m.republican.linear_predictor(r)
                    }
                })
                .collect(),
            ),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format_version: MODEL_FORMAT_VERSION,
            model_type: self.params.model_type().to_string(),
            task: self.task,
            vocab_fingerprint: format!("{:016x}", self.vocab_fingerprint),
            n_features: self.n_features,
            hyperparams: self.hyperparams.clone(),
            parameters: self.params.clone(),
        };
        Ok(serde_json::to_string_pretty(&env)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(s)?;
        if env.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                env.format_version
            )));
        }
        if env.model_type != env.parameters.model_type() {
            return Err(Error::Data(format!(
                "model_type {:?} does not match its parameters ({})",
                env.model_type,
                env.parameters.model_type()
            )));
        }
        let vocab_fingerprint = u64::from_str_radix(&env.vocab_fingerprint, 16)
            .map_err(|e| Error::Data(format!("bad vocab_fingerprint: {e}")))?;
        Ok(TrainedModel {
            task: env.task,
            vocab_fingerprint,
            n_features: env.n_features,
            hyperparams: env.hyperparams,
            params: env.parameters,
        })
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::super::standardize::Standardizer;
    use super::*;

    #[test]
    fn zero_lasso_predicts_republican() {
        let m = TrainedModel {
            task: Task::Party,
            vocab_fingerprint: 7,
            n_features: 2,
            hyperparams: Hyperparams::default(),
            params: ModelParams::Lasso(LassoModel {
                link: Link::Logit,
                intercept: 0.0,
                beta: vec![0.0, 0.0],
                lambda: 1.0,
                standardizer: Standardizer::identity(2),
                cv_deviance_path: vec![],
            }),
        };
        let x = array![[1.0, 2.0], [-3.0, 0.0]];
        assert_eq!(m.predict(x.view()).unwrap(), Predictions::Labels(vec![1, 1]));
        let err = m.predict(array![[1.0]].view()).unwrap_err();
        assert!(err.to_string().contains("0000000000000007"), "{err}");
    }

    #[test]
    fn nb_dwn1_excluded() {
        let x = array![[1.0], [2.0]];
        let err = TrainedModel::train(Method::Nb, Task::Dwn1, x.view(), Target::Scores(&[0.1, 0.2]), &Hyperparams::default(), 0)
            .unwrap_err();
        assert!(matches!(err, Error::Excluded(_)));
    }

    #[test]
    fn json_roundtrip() {
        let x = array![[1.0, 0.0], [2.0, 1.0], [9.0, 0.0], [10.0, 1.0]];
        let m = TrainedModel::train(Method::Tree, Task::Party, x.view(), Target::Labels(&[0, 0, 1, 1]), &Hyperparams::default(), 0xabc)
            .unwrap();
        let s = m.to_json().unwrap();
        assert!(s.contains("\"model_type\": \"tree\""));
        assert!(s.contains("\"vocab_fingerprint\": \"0000000000000abc\""));
        assert_eq!(TrainedModel::from_json(&s).unwrap(), m);
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let x = array![[1.0], [2.0], [9.0], [10.0]];
        let m = TrainedModel::train(Method::Svm, Task::Party, x.view(), Target::Labels(&[0, 0, 1, 1]), &Hyperparams::default(), 1)
            .unwrap();
        assert!(m.predict_checked(x.view(), 2).is_err());
        assert_eq!(m.predict_checked(x.view(), 1).unwrap(), Predictions::Labels(vec![0, 0, 1, 1]));
    }
}
