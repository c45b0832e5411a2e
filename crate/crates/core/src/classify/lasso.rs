//! L1-penalized GLMs fitted by cyclic coordinate descent along a descending
//! λ path, with cross-validation choosing λ.
//!
//! The objective is `Dev(β₀, β) / (2N) + λ Σ|β_j|`, where `Dev` is the
//! binomial deviance for the logit link and the residual sum of squares for
//! the identity link. The intercept is never penalized. With this scaling
//! `λ_max = max_j |x_j'(y − ȳ)| / N` is exactly the smallest λ whose
//! solution has every coefficient at zero.
//!
//! Logit coordinate steps try a proximal Newton update first and fall back
//! to the majorize-minimize update with curvature bound 1/4 whenever the
//! Newton step would raise the objective, so each sweep is monotone.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::params::LassoParams;
use super::standardize::Standardizer;
use super::Target;
use crate::error::{Error, Result};
use crate::eval::make_folds;
use crate::textprep::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    Identity,
}

/// Relative slack on the zero-retention test `|g_j| ≤ λ`, so a coefficient
/// that sits exactly at the threshold is not nudged off zero by rounding.
const ZERO_GUARD: f64 = 1e-10;

fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Per-observation deviance contribution.
fn unit_deviance(link: Link, y: f64, eta: f64) -> f64 {
    match link {
        Link::Logit => 2.0 * (softplus(eta) - y * eta),
        Link::Identity => (y - eta) * (y - eta),
    }
}

/// `Dev / (2N) + λ‖β‖₁` evaluated directly on `x`.
pub fn lasso_objective(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    link: Link,
    intercept: f64,
    beta: &[f64],
    lambda: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let dev: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(r, &yi)| {
            let eta = intercept + r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            unit_deviance(link, yi, eta)
        })
        .sum();
    dev / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Column-major design with cached `Σ x_ij² / N`.
struct Design {
    cols: Vec<Vec<f64>>,
    xsq: Vec<f64>,
    n: usize,
}

impl Design {
    fn new(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows();
        let cols: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let xsq = cols
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .collect();
        Design { cols, xsq, n }
    }

    fn p(&self) -> usize {
        self.cols.len()
    }
}

fn null_intercept(link: Link, y: &[f64]) -> f64 {
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    match link {
        Link::Logit => (ybar / (1.0 - ybar)).ln(),
        Link::Identity => ybar,
    }
}

fn null_deviance(link: Link, y: &[f64]) -> f64 {
    let b0 = null_intercept(link, y);
    y.iter().map(|&v| unit_deviance(link, v, b0)).sum()
}

fn lambda_max_design(d: &Design, y: &[f64]) -> f64 {
    let n = d.n as f64;
    let ybar = y.iter().sum::<f64>() / n;
    d.cols
        .iter()
        .map(|c| (c.iter().zip(y).map(|(a, v)| a * (v - ybar)).sum::<f64>() / n).abs())
        .fold(0.0, f64::max)
}

/// Smallest λ at which every coefficient is zero, for features exactly as
/// given (standardize them first to match the trainer).
pub fn lambda_max(x: ArrayView2<'_, f64>, y: &[f64]) -> f64 {
    lambda_max_design(&Design::new(x), y)
}

/// `n` geometric points from `lambda_max` down to `lambda_max * min_ratio`.
pub fn lambda_grid(lambda_max: f64, n: usize, min_ratio: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lambda_max];
    }
    let step = min_ratio.ln() / (n - 1) as f64;
    (0..n).map(|i| lambda_max * (step * i as f64).exp()).collect()
}

/// Result of coordinate descent at a single λ.
#[derive(Debug, Clone, PartialEq)]
pub struct CdFit {
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after each sweep (full or active-set), if requested.
    pub objective_trace: Vec<f64>,
}

struct State<'a> {
    d: &'a Design,
    y: &'a [f64],
    link: Link,
    lambda: f64,
    b0: f64,
    beta: Vec<f64>,
    /// Linear predictor (logit) or residual `y − η` (identity).
    work: Vec<f64>,
    /// Mean loss `Dev / (2N)` for the logit link.
    loss: f64,
}

impl<'a> State<'a> {
    fn new(d: &'a Design, y: &'a [f64], link: Link, lambda: f64, b0: f64, beta: Vec<f64>) -> Self {
        let mut eta = vec![b0; d.n];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, x) in eta.iter_mut().zip(&d.cols[j]) {
                    *e += b * x;
                }
            }
        }
        let mut s = State {
            d,
            y,
            link,
            lambda,
            b0,
            beta,
            work: Vec::new(),
            loss: 0.0,
        };
        match link {
            Link::Logit => {
                s.loss = s.mean_loss(&eta);
                s.work = eta;
            }
            Link::Identity => s.work = y.iter().zip(&eta).map(|(a, e)| a - e).collect(),
        }
        s
    }

    fn mean_loss(&self, eta: &[f64]) -> f64 {
        eta.iter()
            .zip(self.y)
            .map(|(&e, &y)| softplus(e) - y * e)
            .sum::<f64>()
            / self.d.n as f64
    }

    fn shifted_loss(&self, col: Option<&[f64]>, delta: f64) -> f64 {
        let n = self.d.n as f64;
        let mut acc = 0.0;
        for i in 0..self.d.n {
            let e = self.work[i] + delta * col.map_or(1.0, |c| c[i]);
            acc += softplus(e) - self.y[i] * e;
        }
        acc / n
    }

    fn objective(&self) -> f64 {
        let pen = self.lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>();
        match self.link {
            Link::Logit => self.loss + pen,
            Link::Identity => {
                self.work.iter().map(|r| r * r).sum::<f64>() / (2.0 * self.d.n as f64) + pen
            }
        }
    }

    fn apply(&mut self, col: Option<usize>, delta: f64) {
        let sign = match self.link {
            Link::Logit => 1.0,
            Link::Identity => -1.0,
        };
        match col {
            Some(j) => {
                for (w, x) in self.work.iter_mut().zip(&self.d.cols[j]) {
                    *w += sign * delta * x;
                }
            }
            None => {
                for w in self.work.iter_mut() {
                    *w += sign * delta;
                }
            }
        }
    }

    /// Updates the intercept; returns the squared change.
    fn step_intercept(&mut self) -> f64 {
        let n = self.d.n as f64;
        let delta = match self.link {
            Link::Identity => self.work.iter().sum::<f64>() / n,
            Link::Logit => {
                let (mut g, mut h) = (0.0, 0.0);
                for (&e, &y) in self.work.iter().zip(self.y) {
                    let p = sigmoid(e);
                    g += p - y;
                    h += p * (1.0 - p);
                }
                g /= n;
                h /= n;
                if g == 0.0 {
                    return 0.0;
                }
                let newton = if h > 1e-12 { -g / h } else { f64::NAN };
                let mut chosen = -g / 0.25;
                let mut new_loss = f64::NAN;
                if newton.is_finite() {
                    let l = self.shifted_loss(None, newton);
                    if l <= self.loss {
                        chosen = newton;
                        new_loss = l;
                    }
                }
                if new_loss.is_nan() {
                    new_loss = self.shifted_loss(None, chosen);
                }
                if new_loss > self.loss {
                    return 0.0;
                }
                self.loss = new_loss;
                chosen
            }
        };
        self.b0 += delta;
        self.apply(None, delta);
        delta * delta
    }

    /// Updates coefficient `j`; returns `xsq_j · Δ²`.
    fn step_coef(&mut self, j: usize) -> f64 {
        let xsq = self.d.xsq[j];
        if xsq == 0.0 {
            return 0.0;
        }
        let n = self.d.n as f64;
        let col = &self.d.cols[j];
        let old = self.beta[j];
        let lambda = self.lambda;
        let new = match self.link {
            Link::Identity => {
                let g = col.iter().zip(&self.work).map(|(a, r)| a * r).sum::<f64>() / n;
                if old == 0.0 && g.abs() <= lambda * (1.0 + ZERO_GUARD) {
                    return 0.0;
                }
                soft_threshold(g + xsq * old, lambda) / xsq
            }
            Link::Logit => {
                let mut g = 0.0;
                for ((&x, &e), &y) in col.iter().zip(&self.work).zip(self.y) {
                    g += x * (sigmoid(e) - y);
                }
                g /= n;
                if old == 0.0 && g.abs() <= lambda * (1.0 + ZERO_GUARD) {
                    return 0.0;
                }
                let h = col
                    .iter()
                    .zip(&self.work)
                    .map(|(&x, &e)| {
                        let p = sigmoid(e);
                        x * x * p * (1.0 - p)
                    })
                    .sum::<f64>()
                    / n;
                let current = self.loss + lambda * old.abs();
                let mut accepted = None;
                if h > 1e-12 {
                    let cand = soft_threshold(h * old - g, lambda) / h;
                    let l = self.shifted_loss(Some(col), cand - old);
                    if l + lambda * cand.abs() <= current {
                        accepted = Some((cand, l));
                    }
                }
                let (cand, l) = match accepted {
                    Some(v) => v,
                    None => {
                        let hb = 0.25 * xsq;
                        let cand = soft_threshold(hb * old - g, lambda) / hb;
                        let l = self.shifted_loss(Some(col), cand - old);
                        if l + lambda * cand.abs() > current {
                            return 0.0;
                        }
                        (cand, l)
                    }
                };
                self.loss = l;
                cand
            }
        };
        let delta = new - old;
        if delta == 0.0 {
            return 0.0;
        }
        self.beta[j] = new;
        self.apply(Some(j), delta);
        xsq * delta * delta
    }

    fn sweep(&mut self, coords: &[usize]) -> f64 {
        let mut change = self.step_intercept();
        for &j in coords {
            change = change.max(self.step_coef(j));
        }
        change
    }
}

#[allow(clippy::too_many_arguments)]
fn run_cd(
    d: &Design,
    y: &[f64],
    link: Link,
    lambda: f64,
    start: (f64, Vec<f64>),
    tol: f64,
    max_sweeps: usize,
    trace: bool,
) -> CdFit {
    let mut st = State::new(d, y, link, lambda, start.0, start.1);
    let all: Vec<usize> = (0..d.p()).collect();
    let mut sweeps = 0;
    let mut converged = false;
    let mut objective_trace = Vec::new();
    if trace {
        objective_trace.push(st.objective());
    }
    'outer: while sweeps < max_sweeps {
        let change = st.sweep(&all);
        sweeps += 1;
        if trace {
            objective_trace.push(st.objective());
        }
        if change < tol {
            converged = true;
            break;
        }
        let active: Vec<usize> = all.iter().copied().filter(|&j| st.beta[j] != 0.0).collect();
        loop {
            if sweeps >= max_sweeps {
                break 'outer;
            }
            let change = st.sweep(&active);
            sweeps += 1;
            if trace {
                objective_trace.push(st.objective());
            }
            if change < tol {
                break;
            }
        }
    }
    CdFit {
        intercept: st.b0,
        beta: st.beta,
        sweeps,
        converged,
        objective_trace,
    }
}

/// Coordinate descent at one λ on `x` exactly as given, started from the
/// null model, with the objective recorded after every sweep.
pub fn coordinate_descent(x: ArrayView2<'_, f64>, y: &[f64], link: Link, lambda: f64, params: &LassoParams) -> CdFit {
    let d = Design::new(x);
    let start = (null_intercept(link, y), vec![0.0; d.p()]);
    run_cd(&d, y, link, lambda, start, params.tol, params.max_iter, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    /// Index into the λ grid.
    pub index: usize,
    pub lambda: f64,
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub dev_ratio: f64,
}

fn path_on_design(d: &Design, y: &[f64], link: Link, grid: &[f64], params: &LassoParams, upto: usize) -> Vec<PathPoint> {
    let null_dev = null_deviance(link, y);
    let mut start = (null_intercept(link, y), vec![0.0; d.p()]);
    let mut out = Vec::new();
    for (index, &lambda) in grid.iter().enumerate().take(upto + 1) {
        let fit = run_cd(d, y, link, lambda, start, params.tol, params.max_iter, false);
        start = (fit.intercept, fit.beta.clone());
        if !fit.converged {
            log::warn!("lasso did not converge at lambda {lambda:.4e}; grid point skipped");
            continue;
        }
        let st = State::new(d, y, link, lambda, fit.intercept, fit.beta.clone());
        let dev = match link {
            Link::Logit => 2.0 * d.n as f64 * st.loss,
            Link::Identity => st.work.iter().map(|r| r * r).sum(),
        };
        let dev_ratio = if null_dev > 0.0 { 1.0 - dev / null_dev } else { 1.0 };
        out.push(PathPoint {
            index,
            lambda,
            intercept: fit.intercept,
            beta: fit.beta,
            dev_ratio,
        });
        if dev_ratio >= params.max_dev_ratio {
            break;
        }
    }
    out
}

/// Warm-started path over `grid` on `x` exactly as given. Stops early once
/// the deviance ratio reaches `params.max_dev_ratio`; non-converged points
/// are skipped.
pub fn lasso_path(x: ArrayView2<'_, f64>, y: &[f64], link: Link, grid: &[f64], params: &LassoParams) -> Vec<PathPoint> {
    path_on_design(&Design::new(x), y, link, grid, params, grid.len().saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoModel {
    pub link: Link,
    pub intercept: f64,
    /// Coefficients on the standardized features.
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub standardizer: Standardizer,
    /// `(λ, mean held-out deviance)` for every λ evaluated in every fold.
    pub cv_deviance_path: Vec<(f64, f64)>,
}

impl LassoModel {
    pub fn linear_predictor(&self, x: ArrayView1<'_, f64>) -> f64 {
        let z = self.standardizer.transform_row(x);
        self.intercept + z.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Probability of Republican (logit) or the fitted score (identity).
    pub fn predict_response(&self, x: ArrayView1<'_, f64>) -> f64 {
        let eta = self.linear_predictor(x);
        match self.link {
            Link::Logit => sigmoid(eta),
            Link::Identity => eta,
        }
    }

    /// Coefficients mapped back to the raw feature scale.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let beta: Vec<f64> = self.beta.iter().zip(&self.standardizer.scales).map(|(b, s)| b / s).collect();
        let shift: f64 = beta.iter().zip(&self.standardizer.means).map(|(b, m)| b * m).sum();
        (self.intercept - shift, beta)
    }
}

fn target_values(target: Target<'_>, link: Link) -> Result<Vec<f64>> {
    match (target, link) {
        (Target::Labels(l), Link::Logit) => {
            if !(l.contains(&0) && l.contains(&1)) {
                return Err(Error::Training("logit lasso needs both classes".into()));
            }
            Ok(l.iter().map(|&v| v as f64).collect())
        }
        (Target::Scores(s), Link::Identity) => Ok(s.to_vec()),
        (Target::Labels(_), Link::Identity) => Err(Error::Config("identity link needs real targets".into())),
        (Target::Scores(_), Link::Logit) => Err(Error::Config("logit link needs binary labels".into())),
    }
}

/// Fits the λ path, picks λ by minimum mean held-out deviance over
/// `params.cv_folds` folds (ties go to the larger λ), and refits on all rows.
pub fn train_lasso(x: ArrayView2<'_, f64>, target: Target<'_>, link: Link, params: &LassoParams) -> Result<LassoModel> {
    let (n, p) = x.dim();
    if target.len() != n {
        return Err(Error::Training(format!("{} targets for {n} rows", target.len())));
    }
    if n < 2 {
        return Err(Error::Training("lasso needs at least 2 rows".into()));
    }
    let y = target_values(target, link)?;
    let standardizer = if params.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(p)
    };
    let z = standardizer.transform(x);
    let design = Design::new(z.view());

    let grid = match &params.lambda_grid {
        Some(g) => g.clone(),
        None => {
            let lmax = lambda_max_design(&design, &y);
            if lmax.is_nan() || lmax <= 0.0 {
                return Err(Error::Training("no feature is correlated with the target".into()));
            }
            lambda_grid(lmax, params.n_lambda, params.lambda_min_ratio)
        }
    };

    // cross-validation
    let k = params.cv_folds.min(n);
    let labels: Option<Vec<u8>> = match target {
        Target::Labels(l) => Some(l.to_vec()),
        Target::Scores(_) => None,
    };
    let folds = make_folds(n, k, labels.as_deref(), params.seed)?;
    let mut dev_sum = vec![0.0; grid.len()];
    let mut dev_n = vec![0usize; grid.len()];
    let mut valid = vec![true; grid.len()];
    let mut usable_folds = 0;
    for f in 0..k {
        let (train, test) = folds.split(f);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        if link == Link::Logit && !(yt.contains(&0.0) && yt.contains(&1.0)) {
            log::warn!("cv fold {f} lacks a class in training; skipped");
            continue;
        }
        let xt = z.select(ndarray::Axis(0), &train);
        let st = if params.standardize {
            Standardizer::fit(xt.view())
        } else {
            Standardizer::identity(p)
        };
        let xts = st.transform(xt.view());
        let d = Design::new(xts.view());
        let path = path_on_design(&d, &yt, link, &grid, params, grid.len() - 1);
        let held: Vec<Vec<f64>> = test.iter().map(|&i| st.transform_row(z.row(i))).collect();
        let mut seen = vec![false; grid.len()];
        for pt in &path {
            seen[pt.index] = true;
            for (row, &i) in held.iter().zip(&test) {
                let eta = pt.intercept + row.iter().zip(&pt.beta).map(|(a, b)| a * b).sum::<f64>();
                dev_sum[pt.index] += unit_deviance(link, y[i], eta);
            }
            dev_n[pt.index] += test.len();
        }
        for (v, s) in valid.iter_mut().zip(&seen) {
            *v &= *s;
        }
        usable_folds += 1;
    }
    if usable_folds == 0 {
        return Err(Error::Training("no usable cross-validation fold".into()));
    }
    // keep only the λ values every fold reached, up to the shortest path
    let reach = valid.iter().rposition(|&v| v).map_or(0, |i| i + 1);
    let cv_deviance_path: Vec<(usize, f64, f64)> = (0..reach)
        .filter(|&i| valid[i] && dev_n[i] > 0)
        .map(|i| (i, grid[i], dev_sum[i] / dev_n[i] as f64))
        .collect();
    if cv_deviance_path.is_empty() {
        return Err(Error::NonConvergence("lasso failed at every grid point".into()));
    }
    let chosen = cv_deviance_path
        .iter()
        .fold(None::<&(usize, f64, f64)>, |best, c| match best {
            Some(b) if b.2 <= c.2 => Some(b),
            _ => Some(c),
        })
        .expect("non-empty");
    let full = path_on_design(&design, &y, link, &grid, params, chosen.0);
    let point = full
        .iter()
        .rev()
        .find(|pt| pt.index <= chosen.0)
        .ok_or_else(|| Error::NonConvergence("lasso refit failed on all data".into()))?;
    if point.index != chosen.0 {
        log::warn!(
            "full-data path stopped at lambda {:.4e} before the chosen {:.4e}",
            point.lambda,
            chosen.1
        );
    }
    Ok(LassoModel {
        link,
        intercept: point.intercept,
        beta: point.beta.clone(),
        lambda: point.lambda,
        standardizer,
        cv_deviance_path: cv_deviance_path.iter().map(|&(_, l, d)| (l, d)).collect(),
    })
}

/// The `k` largest-magnitude nonzero coefficients with their stems. Positive
/// values lean Republican under the D = 0, R = 1 encoding. Magnitude ties
/// are broken by stem.
pub fn partisan_words(model: &LassoModel, vocab: &Vocabulary, k: usize) -> Result<Vec<(String, f64)>> {
    if model.beta.len() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: model.beta.len(),
            actual: vocab.len(),
            fingerprint: vocab.fingerprint(),
        });
    }
    if model.link != Link::Logit {
        return Err(Error::Config("partisan words need a logit-link model".into()));
    }
    let mut words: Vec<(String, f64)> = model
        .beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, &b)| (vocab.stem(j).to_string(), b))
        .collect();
    words.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
    words.truncate(k);
    Ok(words)
}
