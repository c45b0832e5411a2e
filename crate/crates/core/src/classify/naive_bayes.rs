use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::params::NbParams;
use super::standardize::Standardizer;
use crate::error::{Error, Result};

/// Two-class Gaussian naive Bayes. Index 0 is Democrat, 1 is Republican.
///
/// Means and variances cover only the kept features; a feature whose
/// variance is exactly zero inside any class with at least two members is
/// dropped before fitting, because a point-mass likelihood would let a single
/// word decide every prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub kept: Vec<usize>,
    pub dropped_features: Vec<usize>,
    pub standardizer: Option<Standardizer>,
    pub n_features: usize,
}

impl NbModel {
    /// Builds a model directly from its parameters, all features kept and no
    /// standardization.
    pub fn from_parameters(priors: [f64; 2], means: [Vec<f64>; 2], variances: [Vec<f64>; 2]) -> Result<Self> {
        let p = means[0].len();
        if means[1].len() != p || variances[0].len() != p || variances[1].len() != p {
            return Err(Error::Training("parameter vectors differ in length".into()));
        }
        if (priors[0] + priors[1] - 1.0).abs() > 1e-12 || priors.iter().any(|&v| v <= 0.0) {
            return Err(Error::Training("priors must be positive and sum to 1".into()));
        }
        if variances.iter().flatten().any(|&v| v.is_nan() || v <= 0.0) {
            return Err(Error::Training("variances must be positive".into()));
        }
        Ok(NbModel {
            priors,
            means,
            variances,
            kept: (0..p).collect(),
            dropped_features: Vec::new(),
            standardizer: None,
            n_features: p,
        })
    }

    /// Per-class log joint densities `log π_k + Σ_j log N(x_j; μ_kj, σ²_kj)`.
    pub fn log_joint(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        let z = match &self.standardizer {
            Some(s) => s.transform_row(x),
            None => x.to_vec(),
        };
        let mut out = [0.0; 2];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = self.priors[k].ln();
            for (f, &j) in self.kept.iter().enumerate() {
                let var = self.variances[k][f];
                let d = z[j] - self.means[k][f];
                acc -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var);
            }
            *slot = acc;
        }
        out
    }

    /// Normalized posterior `[P(D | x), P(R | x)]`.
    pub fn posterior(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        let lj = self.log_joint(x);
        let m = lj[0].max(lj[1]);
        let e0 = (lj[0] - m).exp();
        let e1 = (lj[1] - m).exp();
        let s = e0 + e1;
        [e0 / s, e1 / s]
    }
}

pub fn train_naive_bayes(x: ArrayView2<'_, f64>, labels: &[u8], params: &NbParams) -> Result<NbModel> {
    let (n, p) = x.dim();
    if labels.len() != n {
        return Err(Error::Training(format!("{} labels for {n} rows", labels.len())));
    }
    let counts = [
        labels.iter().filter(|&&l| l == 0).count(),
        labels.iter().filter(|&&l| l == 1).count(),
    ];
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::Training("naive Bayes needs both classes".into()));
    }
    if counts[0] + counts[1] != n {
        return Err(Error::Training("labels must be 0 or 1".into()));
    }
    for (k, &c) in counts.iter().enumerate() {
        if c == 1 {
            log::warn!("class {k} has a single member; its variances are floored");
        }
    }
    let standardizer = params.standardize.then(|| Standardizer::fit(x));
    let z = match &standardizer {
        Some(s) => s.transform(x),
        None => x.to_owned(),
    };

    let mut raw_means = [vec![0.0; p], vec![0.0; p]];
    let mut raw_vars = [vec![0.0; p], vec![0.0; p]];
    for (row, &l) in z.rows().into_iter().zip(labels) {
        let m = &mut raw_means[l as usize];
        for (acc, v) in m.iter_mut().zip(row.iter()) {
            *acc += v;
        }
    }
    for k in 0..2 {
        for v in raw_means[k].iter_mut() {
            *v /= counts[k] as f64;
        }
    }
    for (row, &l) in z.rows().into_iter().zip(labels) {
        let k = l as usize;
        for ((acc, v), m) in raw_vars[k].iter_mut().zip(row.iter()).zip(&raw_means[k]) {
            *acc += (v - m) * (v - m);
        }
    }
    for k in 0..2 {
        for v in raw_vars[k].iter_mut() {
            *v /= counts[k] as f64;
        }
    }

    let (dropped, kept): (Vec<usize>, Vec<usize>) =
        (0..p).partition(|&j| (0..2).any(|k| counts[k] >= 2 && raw_vars[k][j] == 0.0));
    let floor = params.variance_floor;
    let pick = |src: &[Vec<f64>; 2], floor_it: bool| -> [Vec<f64>; 2] {
        [0, 1].map(|k| {
            kept.iter()
                .map(|&j| if floor_it { src[k][j].max(floor) } else { src[k][j] })
                .collect()
        })
    };
    let means = pick(&raw_means, false);
    let variances = pick(&raw_vars, true);
    Ok(NbModel {
        priors: [counts[0] as f64 / n as f64, counts[1] as f64 / n as f64],
        means,
        variances,
        kept,
        dropped_features: dropped,
        standardizer,
        n_features: p,
    })
}

/// Label and posterior for one row. An exact posterior tie goes to the
/// lexicographically first party, Democrat.
pub fn predict_naive_bayes(model: &NbModel, x: ArrayView1<'_, f64>) -> (u8, [f64; 2]) {
    let post = model.posterior(x);
    let label = if post[1] > post[0] { 1 } else { 0 };
    (label, post)
}
