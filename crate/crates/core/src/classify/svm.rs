//! Linear support vector machines with squared slack penalties.
//!
//! Classification minimizes `½‖β‖² + C Σ ξ_j²` subject to
//! `y_j (x_j'β + b) ≥ 1 − ξ_j`; regression minimizes
//! `½‖β‖² + C Σ (ξ_j² + ξ*_j²)` with an ε-insensitive tube. Both are solved
//! in the dual
//!
//! ```text
//! min ½ αᵀ Q̃ α + pᵀ α   s.t.  α ≥ 0,  sᵀ α = 0,
//! Q̃_ab = s_a s_b ⟨x_a, x_b⟩ + δ_ab / (2C)
//! ```
//!
//! by sequential minimal optimization with second-order working-set
//! selection. The squared slack removes the usual upper bound on `α`, so
//! every support vector is free and the bias is an average over all of them.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::params::SvmParams;
use super::standardize::Standardizer;
use super::Target;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvmKind {
    Classify,
    Regress,
}

/// A dual problem over variables that each refer to a base point.
#[derive(Debug, Clone)]
pub struct DualProblem<'a> {
    /// Gram matrix of the base points.
    pub gram: &'a Array2<f64>,
    /// Base point of each variable.
    pub point: Vec<usize>,
    /// Sign `s_a ∈ {+1, −1}` of each variable.
    pub sign: Vec<f64>,
    /// Linear term `p_a`.
    pub linear: Vec<f64>,
    /// Diagonal ridge added to `Q̃`, i.e. `1 / (2C)`.
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Offset `b` of the decision function `f(x) = x'β + b`.
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Maximal violating-pair gap `m(α) − M(α)` at exit.
    pub kkt_gap: f64,
}

impl DualProblem<'_> {
    fn q(&self, a: usize, b: usize) -> f64 {
        let k = self.gram[[self.point[a], self.point[b]]];
        self.sign[a] * self.sign[b] * k + if a == b { self.ridge } else { 0.0 }
    }

    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let n = alpha.len();
        let mut quad = 0.0;
        for a in 0..n {
            if alpha[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if alpha[b] != 0.0 {
                    quad += alpha[a] * alpha[b] * self.q(a, b);
                }
            }
        }
        0.5 * quad + alpha.iter().zip(&self.linear).map(|(a, p)| a * p).sum::<f64>()
    }
}

fn in_up(s: f64, a: f64) -> bool {
    s > 0.0 || a > 0.0
}

fn in_low(s: f64, a: f64) -> bool {
    s < 0.0 || a > 0.0
}

/// SMO with the second-order working-set rule. Stops when the maximal
/// violating pair gap drops below `tol`, or after `max_iter` updates.
pub fn solve_dual(prob: &DualProblem<'_>, tol: f64, max_iter: usize) -> DualSolution {
    let n = prob.point.len();
    let s = &prob.sign;
    let mut alpha = vec![0.0; n];
    let mut grad = prob.linear.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < max_iter {
        // i: maximal −s G over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(s[t], alpha[t]) {
                let v = -s[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(s[t], alpha[t]) {
                continue;
            }
            let v = -s[t] * grad[t];
            if v < gmin {
                gmin = v;
            }
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let mut a = prob.q(i, i) + prob.q(t, t) - 2.0 * s[i] * s[t] * prob.q(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j = t;
                }
            }
        }
        gap = gmax - gmin;
        if gap < tol || i == usize::MAX || j == usize::MAX {
            converged = gap < tol || i == usize::MAX || j == usize::MAX;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qii = prob.q(i, i);
        let qjj = prob.q(j, j);
        let qij = prob.q(i, j);
        if s[i] != s[j] {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for (t, g) in grad.iter_mut().enumerate() {
            *g += prob.q(t, i) * di + prob.q(t, j) * dj;
        }
    }

    // bias: f(x) = x'β − ρ with ρ the mean of s G over free variables
    let mut sum = 0.0;
    let mut free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = s[t] * grad[t];
        if alpha[t] > 0.0 {
            sum += yg;
            free += 1;
        } else if s[t] > 0.0 {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations with KKT gap {gap:.3e}");
    }
    DualSolution {
        alpha,
        bias: -rho,
        iterations,
        converged,
        kkt_gap: gap,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kind: SvmKind,
    /// Weights on the standardized features.
    pub beta: Vec<f64>,
    pub bias: f64,
    pub standardizer: Standardizer,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_gap: f64,
}

impl SvmModel {
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        let z = self.standardizer.transform_row(x);
        z.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }
}

/// Primal objective on features already in the model's space.
pub fn svm_primal_objective(
    x: ArrayView2<'_, f64>,
    target: Target<'_>,
    beta: &[f64],
    bias: f64,
    c: f64,
    epsilon: f64,
) -> f64 {
    let reg = 0.5 * beta.iter().map(|b| b * b).sum::<f64>();
    let f: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + bias)
        .collect();
    let loss: f64 = match target {
        Target::Labels(l) => f
            .iter()
            .zip(l)
            .map(|(f, &y)| {
                let y = if y == 1 { 1.0 } else { -1.0 };
                (1.0 - y * f).max(0.0).powi(2)
            })
            .sum(),
        Target::Scores(s) => f
            .iter()
            .zip(s)
            .map(|(f, y)| ((y - f).abs() - epsilon).max(0.0).powi(2))
            .sum(),
    };
    reg + c * loss
}

/// Trains a linear SVM (labels) or SVR (scores). Features are standardized
/// first unless `params.standardize` is off. A run that hits `max_iter`
/// still returns its last iterate, with `converged = false`.
pub fn train_svm(x: ArrayView2<'_, f64>, target: Target<'_>, params: &SvmParams) -> Result<SvmModel> {
    let (n, p) = x.dim();
    if target.len() != n {
        return Err(Error::Training(format!("{} targets for {n} rows", target.len())));
    }
    if n == 0 {
        return Err(Error::Training("no training rows".into()));
    }
    let standardizer = if params.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(p)
    };
    let z = standardizer.transform(x);
    let gram = z.dot(&z.t());
    let ridge = 1.0 / (2.0 * params.c);

    let (kind, prob) = match target {
        Target::Labels(l) => {
            if !(l.contains(&0) && l.contains(&1)) {
                return Err(Error::Training("SVM needs both classes".into()));
            }
            let sign = l.iter().map(|&y| if y == 1 { 1.0 } else { -1.0 }).collect();
            (
                SvmKind::Classify,
                DualProblem {
                    gram: &gram,
                    point: (0..n).collect(),
                    sign,
                    linear: vec![-1.0; n],
                    ridge,
                },
            )
        }
        Target::Scores(y) => {
            let mut point: Vec<usize> = (0..n).collect();
            point.extend(0..n);
            let mut sign = vec![1.0; n];
            sign.extend(std::iter::repeat_n(-1.0, n));
            let mut linear: Vec<f64> = y.iter().map(|v| params.epsilon - v).collect();
            linear.extend(y.iter().map(|v| params.epsilon + v));
            (
                SvmKind::Regress,
                DualProblem {
                    gram: &gram,
                    point,
                    sign,
                    linear,
                    ridge,
                },
            )
        }
    };
    let sol = solve_dual(&prob, params.tol, params.max_iter);
    let mut beta = vec![0.0; p];
    for (a, &alpha) in sol.alpha.iter().enumerate() {
        if alpha != 0.0 {
            let coef = alpha * prob.sign[a];
            for (b, v) in beta.iter_mut().zip(z.row(prob.point[a])) {
                *b += coef * v;
            }
        }
    }
    Ok(SvmModel {
        kind,
        beta,
        bias: sol.bias,
        standardizer,
        converged: sol.converged,
        iterations: sol.iterations,
        kkt_gap: sol.kkt_gap,
    })
}
