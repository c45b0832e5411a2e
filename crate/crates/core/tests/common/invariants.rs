//! Solver invariants over many random instances: monotone lasso
//! objective traces, all-zero fits at lambda_max, and SVM KKT residuals
//! computed from scratch.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use partyline::classify::{coordinate_descent, lambda_max, solve_dual, DualProblem, LassoParams, Link};

/// A random lasso problem: `n × p` Gaussian design, response from a sparse
/// linear predictor, logit or identity link.
fn lasso_case(seed: u64) -> (Array2<f64>, Vec<f64>, Link) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(20..60);
    let p = rng.random_range(2..15);
    let link = if seed.is_multiple_of(2) { Link::Logit } else { Link::Identity };
    let g = Normal::new(0.0, 1.0).unwrap();
    let x = Array2::from_shape_fn((n, p), |_| g.sample(&mut rng) * 2.0 + 0.5);
    let beta: Vec<f64> = (0..p).map(|j| if j < 3 { g.sample(&mut rng) } else { 0.0 }).collect();
    let mut y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = (0..p).map(|j| x[[i, j]] * beta[j]).sum();
            match link {
                Link::Identity => eta + g.sample(&mut rng),
                Link::Logit => f64::from(u8::from(rng.random_bool(1.0 / (1.0 + (-eta).exp())))),
            }
        })
        .collect();
    if link == Link::Logit {
        // keep both classes present
        y[0] = 0.0;
        y[1] = 1.0;
    }
    (x, y, link)
}

pub fn lasso_trace_monotone(cases: u64) -> Result<(), String> {
    let params = LassoParams::default();
    for seed in 0..cases {
        let (x, y, link) = lasso_case(seed);
        let lmax = lambda_max(x.view(), &y);
        let lambda = lmax * [0.5, 0.1, 0.01][seed as usize % 3];
        let fit = coordinate_descent(x.view(), &y, link, lambda, &params);
        for w in fit.objective_trace.windows(2) {
            if w[1] > w[0] + 1e-12 * w[0].abs().max(1.0) {
                return Err(format!("instance {seed}: objective rose from {} to {}", w[0], w[1]));
            }
        }
    }
    Ok(())
}

pub fn lasso_zero_at_lambda_max(cases: u64) -> Result<(), String> {
    let params = LassoParams::default();
    for seed in 0..cases {
        let (x, y, link) = lasso_case(seed);
        let fit = coordinate_descent(x.view(), &y, link, lambda_max(x.view(), &y), &params);
        if fit.beta.iter().any(|&b| b != 0.0) {
            return Err(format!("instance {seed}: nonzero coefficients {:?} at lambda_max", fit.beta));
        }
    }
    Ok(())
}

/// Maximal violating-pair gap `m(α) − M(α)` computed from scratch for the
/// dual with only lower bounds: `I_up = {s = +1} ∪ {s = −1, α > 0}`,
/// `I_low = {s = −1} ∪ {s = +1, α > 0}`, scores `−s_a ∇_a`.
fn kkt_residual(gram: &Array2<f64>, sign: &[f64], ridge: f64, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let grad: Vec<f64> = (0..n)
        .map(|a| {
            let q: f64 = (0..n).map(|b| sign[a] * sign[b] * gram[[a, b]] * alpha[b]).sum();
            q + ridge * alpha[a] - 1.0
        })
        .collect();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for a in 0..n {
        let v = -sign[a] * grad[a];
        if sign[a] > 0.0 || alpha[a] > 0.0 {
            up = up.max(v);
        }
        if sign[a] < 0.0 || alpha[a] > 0.0 {
            low = low.min(v);
        }
    }
    up - low
}

pub fn svm_kkt_at_convergence(cases: u64) -> Result<usize, String> {
    let tol = 1e-3;
    let mut converged = 0;
    for seed in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(10..60);
        let dim = rng.random_range(1..6);
        let (x, y) = super::svm_instance(seed, n, dim);
        let gram = x.dot(&x.t());
        let c = [0.1, 1.0, 10.0][seed as usize % 3];
        let sign: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
        let prob = DualProblem {
            gram: &gram,
            point: (0..n).collect(),
            sign: sign.clone(),
            linear: vec![-1.0; n],
            ridge: 1.0 / (2.0 * c),
        };
        let sol = solve_dual(&prob, tol, 1_000_000);
        if !sol.converged {
            continue;
        }
        converged += 1;
        let r = kkt_residual(&gram, &sign, prob.ridge, &sol.alpha);
        if r >= tol {
            return Err(format!("instance {seed}: KKT residual {r} ≥ {tol}"));
        }
    }
    Ok(converged)
}
