//! Independent reference computations shared by the integration tests and
//! the acceptance target. Nothing here calls into the solvers it checks.

#![allow(dead_code)]

pub mod invariants;

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use partyline::classify::{Link, Method, TreeModel, TreeNode};
use partyline::eval::{EvalMatrix, FoldAssignment};
use partyline::textprep::{stem, StemmerKind};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

// ---------------------------------------------------------------- stemmers

/// `(failures, total)` over a vocabulary/output vector pair.
pub fn stemmer_vector_failures(voc: &str, out: &str, kind: StemmerKind) -> (Vec<String>, usize) {
    let voc = std::fs::read_to_string(data_dir().join(voc)).unwrap();
    let out = std::fs::read_to_string(data_dir().join(out)).unwrap();
    let pairs: Vec<(&str, &str)> = voc.lines().zip(out.lines()).filter(|(w, _)| !w.is_empty()).collect();
    let failures = pairs
        .iter()
        .filter_map(|&(w, e)| {
            let got = stem(w, kind);
            (got != e).then(|| format!("{w} -> {got} (expected {e})"))
        })
        .collect();
    (failures, pairs.len())
}

// ---------------------------------------------------------------- cleaning

/// The two speech bodies of the Hollings excerpt (30 April 2002).
pub const EXCERPT: [&str; 2] = [
    "We have to get a value-added tax to pay for this war on terrorism that is costing the country and offset the 17-percent value added tax advantage. For example, in Europe where it is rebated, it is costing us a 17-percent differential in trade right there.",
    "Enforce our dumping laws, but please do not say you have to get more productive. What is not producing is not the industrial worker in the United States, it is the U.S. Congress. We haven't produced. We have been running around like lemmings: Free trade, free trade, fast track, fast track\u{2014}having no idea in the Lord's world what we are doing; whereas we are exporting jobs faster than we can create them.",
];

/// Stems derived by hand: punctuation erased (so "value-added" becomes
/// one token and the em dash fuses "track" with "having"), tokens holding
/// digits dropped, stop words and tokens outside 3–14 letters removed,
/// then the classic Porter rules applied word by word.
pub const EXCERPT_STEMS: [&[&str]; 2] = [
    &[
        "get", "valuead", "tax", "pai", "war", "terror", "cost", "countri", "offset", "valu", "ad", "tax", "advantag",
        "exampl", "europ", "rebat", "cost", "differenti", "trade", "right",
    ],
    &[
        "enforc", "dump", "law", "pleas", "sai", "get", "product", "produc", "industri", "worker", "unit", "state",
        "congress", "produc", "run", "around", "like", "lem", "free", "trade", "free", "trade", "fast", "track", "fast",
        "trackhav", "idea", "lord", "world", "wherea", "export", "job", "faster", "can", "creat",
    ],
];

// ---------------------------------------------------------------- naive Bayes

/// Posterior `[P(D|x), P(R|x)]` by multiplying the prior with the Gaussian
/// densities directly, with no logarithms.
pub fn nb_direct_posterior(priors: [f64; 2], means: &[Vec<f64>; 2], vars: &[Vec<f64>; 2], x: &[f64]) -> [f64; 2] {
    let joint = |c: usize| {
        let mut p = priors[c];
        for j in 0..x.len() {
            let v = vars[c][j];
            let d = x[j] - means[c][j];
            p *= (-(d * d) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        }
        p
    };
    let (a, b) = (joint(0), joint(1));
    [a / (a + b), b / (a + b)]
}

// ---------------------------------------------------------------- SVM

/// Two overlapping Gaussian clouds in `dim` dimensions, labels 0/1.
pub fn svm_instance(seed: u64, n: usize, dim: usize) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = Array2::zeros((n, dim));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let shift = if label == 1 { 0.8 } else { -0.8 };
        for j in 0..dim {
            x[[i, j]] = noise.sample(&mut rng) + if j == 0 { shift } else { 0.3 * shift };
        }
        y.push(label);
    }
    (x, y)
}

/// Projection onto `{α ≥ 0, sᵀα = 0}` by bisection on the multiplier of
/// the equality constraint.
fn project(v: &[f64], s: &[f64]) -> Vec<f64> {
    let g = |mu: f64| -> f64 { v.iter().zip(s).map(|(vi, si)| si * (vi - mu * si).max(0.0)).sum() };
    let span = v.iter().map(|a| a.abs()).fold(1.0, f64::max) * 2.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    v.iter().zip(s).map(|(vi, si)| (vi - mu * si).max(0.0)).collect()
}

/// Optimal primal value of the squared-slack SVM, found by accelerated
/// projected gradient on the dual QP
/// `min ½αᵀ(K∘ssᵀ + I/2C)α − 1ᵀα, α ≥ 0, sᵀα = 0`; by strong duality the
/// primal optimum is the negated dual optimum.
pub fn svm_qp_oracle(x: &Array2<f64>, y: &[u8], c: f64) -> f64 {
    let n = x.nrows();
    let s: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let mut q = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let k: f64 = x.row(a).iter().zip(x.row(b)).map(|(u, v)| u * v).sum();
            q[a][b] = s[a] * s[b] * k + if a == b { 1.0 / (2.0 * c) } else { 0.0 };
        }
    }
    // step from the Gershgorin bound on the largest eigenvalue
    let lip = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let grad = |al: &[f64]| -> Vec<f64> { (0..n).map(|a| q[a].iter().zip(al).map(|(u, v)| u * v).sum::<f64>() - 1.0).collect() };
    let obj = |al: &[f64]| -> f64 {
        let g = grad(al);
        (0..n).map(|a| 0.5 * al[a] * (g[a] + 1.0) - al[a]).sum()
    };
    let mut alpha = vec![0.0; n];
    let mut z = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..5_000 {
        let g = grad(&z);
        let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lip).collect();
        let next = project(&step, &s);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&alpha).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        alpha = next;
        t = t_next;
    }
    -obj(&alpha)
}

// ---------------------------------------------------------------- lasso

/// Two standardized-ish predictors with a sparse true signal.
pub fn lasso_instance(seed: u64, n: usize, link: Link) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = Array2::zeros((n, 2));
    for v in x.iter_mut() {
        *v = noise.sample(&mut rng);
    }
    let b1: f64 = rng.random_range(-1.5..1.5);
    let y = (0..n)
        .map(|i| {
            let eta = 0.3 + b1 * x[[i, 0]] + 0.2 * x[[i, 1]];
            match link {
                Link::Identity => eta + 0.5 * noise.sample(&mut rng),
                Link::Logit => {
                    let p = 1.0 / (1.0 + (-eta).exp());
                    f64::from(u8::from(rng.random_bool(p)))
                }
            }
        })
        .collect();
    (x, y)
}

/// `Dev/(2N) + λ‖β‖₁` written out from the likelihoods.
pub fn lasso_reference_objective(x: &Array2<f64>, y: &[f64], link: Link, b0: f64, b: [f64; 2], lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let mut dev = 0.0;
    for i in 0..x.nrows() {
        let eta = b0 + b[0] * x[[i, 0]] + b[1] * x[[i, 1]];
        dev += match link {
            Link::Identity => (y[i] - eta).powi(2),
            Link::Logit => {
                let p = 1.0 / (1.0 + (-eta).exp());
                -2.0 * (y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln())
            }
        };
    }
    dev / (2.0 * n) + lambda * (b[0].abs() + b[1].abs())
}

/// Best intercept for fixed slopes: closed form for the identity link,
/// Newton on the score equation for the logit link.
fn best_intercept(x: &Array2<f64>, y: &[f64], link: Link, b: [f64; 2]) -> f64 {
    let lin: Vec<f64> = (0..x.nrows()).map(|i| b[0] * x[[i, 0]] + b[1] * x[[i, 1]]).collect();
    match link {
        Link::Identity => y.iter().zip(&lin).map(|(a, l)| a - l).sum::<f64>() / y.len() as f64,
        Link::Logit => {
            // Newton on the concave profile log-likelihood, steps clamped
            let mut b0 = 0.0;
            for _ in 0..100 {
                let (mut score, mut curv) = (0.0, 0.0);
                for (yi, l) in y.iter().zip(&lin) {
                    let p = 1.0 / (1.0 + (-(b0 + l)).exp());
                    score += yi - p;
                    curv += p * (1.0 - p);
                }
                if score.abs() < 1e-13 * y.len() as f64 {
                    break;
                }
                b0 += (score / curv.max(1e-12)).clamp(-2.0, 2.0);
            }
            b0
        }
    }
}

/// Minimum of the objective over slopes on a grid of step 0.02 covering
/// `[-3, 3]²`, refined by a step-0.0005 grid around the best point, with
/// the intercept profiled out at every grid point.
pub fn lasso_grid_oracle(x: &Array2<f64>, y: &[f64], link: Link, lambda: f64) -> (f64, [f64; 2]) {
    let eval = |b: [f64; 2]| {
        let b0 = best_intercept(x, y, link, b);
        lasso_reference_objective(x, y, link, b0, b, lambda)
    };
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    let coarse = 0.02;
    for i in -150..=150 {
        for j in -150..=150 {
            let b = [i as f64 * coarse, j as f64 * coarse];
            let v = eval(b);
            if v < best.0 {
                best = (v, b);
            }
        }
    }
    let centre = best.1;
    let fine = 0.0005;
    for i in -40..=40 {
        for j in -40..=40 {
            let b = [centre[0] + i as f64 * fine, centre[1] + j as f64 * fine];
            let v = eval(b);
            if v < best.0 {
                best = (v, b);
            }
        }
    }
    best
}

/// One-predictor lasso with identity link and centred data: the slope is
/// `S(⟨x, y⟩/N, λ) / (⟨x, x⟩/N)`.
pub fn soft_threshold_closed_form(x: &[f64], y: &[f64], lambda: f64) -> f64 {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let xy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum::<f64>() / n;
    let xx: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum::<f64>() / n;
    let z = xy;
    let st = if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    };
    st / xx
}

// ---------------------------------------------------------------- tree

/// Prints a tree as nested `x{f}<={t}?(left):(right)` with leaf values.
pub fn tree_shape(tree: &TreeModel) -> String {
    fn go(nodes: &[TreeNode], at: usize) -> String {
        match &nodes[at] {
            TreeNode::Leaf { value, .. } => format!("{value}"),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => format!("x{feature}<={threshold}?({}):({})", go(nodes, *left), go(nodes, *right)),
        }
    }
    go(&tree.nodes, 0)
}

/// XOR on the unit square. Every first split has zero gain, so the lowest
/// feature and threshold wins; each child then separates on the other
/// coordinate.
pub const XOR_TREE: &str = "x0<=0.5?(x1<=0.5?(0):(1)):(x1<=0.5?(1):(0))";

// ---------------------------------------------------------------- folds

/// Checks that `folds` partitions `0..n` into `k` non-empty parts whose
/// sizes differ by at most one, with every class spread across folds to
/// within one item. Returns a description of the first violation.
pub fn fold_violation(folds: &FoldAssignment, n: usize, k: usize, labels: Option<&[u8]>) -> Option<String> {
    if folds.fold_of.len() != n || folds.k != k {
        return Some("wrong shape".into());
    }
    if let Some(i) = folds.fold_of.iter().position(|&f| f >= k) {
        return Some(format!("item {i} in fold {}", folds.fold_of[i]));
    }
    let mut seen = vec![0usize; n];
    for f in 0..k {
        let (train, test) = folds.split(f);
        if train.len() + test.len() != n {
            return Some(format!("fold {f}: train and test do not cover the items"));
        }
        if train.iter().any(|i| test.binary_search(i).is_ok()) {
            return Some(format!("fold {f}: train and test overlap"));
        }
        for &i in &test {
            seen[i] += 1;
        }
    }
    if seen.iter().any(|&c| c != 1) {
        return Some("an item is not in exactly one test fold".into());
    }
    let sizes = folds.sizes();
    let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    if hi - lo > 1 || *lo == 0 {
        return Some(format!("unbalanced sizes {sizes:?}"));
    }
    if let Some(l) = labels {
        let mut classes: Vec<u8> = l.to_vec();
        classes.sort_unstable();
        classes.dedup();
        for c in classes {
            let per: Vec<usize> = (0..k)
                .map(|f| folds.members(f).iter().filter(|&&i| l[i] == c).count())
                .collect();
            if per.iter().max().unwrap() - per.iter().min().unwrap() > 1 {
                return Some(format!("class {c} unevenly spread: {per:?}"));
            }
        }
    }
    None
}

// ---------------------------------------------------------------- tables

/// A party-task accuracy grid transcribed from the published tables.
pub fn published_grid(method: Method) -> EvalMatrix {
    let text = std::fs::read_to_string(data_dir().join(format!("published_{}.tsv", method.name()))).unwrap();
    EvalMatrix::from_tsv(method, partyline::classify::Task::Party, &text).unwrap()
}
