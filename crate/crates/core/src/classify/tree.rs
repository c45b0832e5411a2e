//! CART-style binary trees grown greedily on weighted child impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values within a node; rows with `x <= threshold` go left. Splits are
//! taken whenever one is admissible under `min_leaf`, even with zero
//! impurity decrease, so XOR-like layouts still separate. Among equally good
//! splits the lowest feature index and then the lowest threshold wins.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::params::{Impurity, TreeParams};
use super::Target;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
        n: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub impurity: Impurity,
    pub n_features: usize,
}

impl TreeModel {
    /// Leaf value reached by `x`: a class (0 = D, 1 = R) for gini trees, a
    /// mean score for mse trees.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// Sufficient statistics of a set of rows.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: f64,
    /// class-1 count (gini) or sum of y (mse)
    s1: f64,
    /// sum of y^2 (mse only)
    s2: f64,
}

impl Stats {
    fn add(&mut self, y: f64) {
        self.n += 1.0;
        self.s1 += y;
        self.s2 += y * y;
    }

    fn minus(self, o: Stats) -> Stats {
        Stats {
            n: self.n - o.n,
            s1: self.s1 - o.s1,
            s2: self.s2 - o.s2,
        }
    }

    fn plus(self, o: Stats) -> Stats {
        Stats {
            n: self.n + o.n,
            s1: self.s1 + o.s1,
            s2: self.s2 + o.s2,
        }
    }

    /// Impurity times node size.
    fn weighted(&self, kind: Impurity) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        match kind {
            Impurity::Gini => {
                let p1 = self.s1 / self.n;
                let p0 = 1.0 - p1;
                self.n * (1.0 - p0 * p0 - p1 * p1)
            }
            Impurity::Mse => (self.s2 - self.s1 * self.s1 / self.n).max(0.0),
        }
    }
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    /// Sparse rows: nonzero `(feature, value)` pairs.
    rows: Vec<Vec<(u32, f64)>>,
    y: &'a [f64],
    kind: Impurity,
    params: &'a TreeParams,
    nodes: Vec<TreeNode>,
    buckets: Vec<Vec<(f64, u32)>>,
}

impl Grower<'_> {
    fn stats(&self, idx: &[usize]) -> Stats {
        let mut s = Stats::default();
        for &i in idx {
            s.add(self.y[i]);
        }
        s
    }

    fn leaf_value(&self, st: &Stats) -> f64 {
        match self.kind {
            // majority class, ties to class 1 (Republican)
            Impurity::Gini => {
                if st.s1 * 2.0 >= st.n {
                    1.0
                } else {
                    0.0
                }
            }
            Impurity::Mse => st.s1 / st.n,
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.y[idx[0]];
        idx.iter().all(|&i| self.y[i] == first)
    }

    fn value_of(&self, i: usize, feature: usize) -> f64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&(feature as u32), |&(j, _)| j) {
            Ok(p) => row[p].1,
            Err(_) => 0.0,
        }
    }

    fn best_split(&mut self, idx: &[usize], total: Stats) -> Option<Candidate> {
        let min_leaf = self.params.min_leaf as f64;
        let mut touched: Vec<usize> = Vec::new();
        for &i in idx {
            for &(j, v) in &self.rows[i] {
                let b = &mut self.buckets[j as usize];
                if b.is_empty() {
                    touched.push(j as usize);
                }
                b.push((v, i as u32));
            }
        }
        touched.sort_unstable();

        let mut best: Option<Candidate> = None;
        for &j in &touched {
            let mut bucket = std::mem::take(&mut self.buckets[j]);
            bucket.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut nonzero = Stats::default();
            for &(_, i) in &bucket {
                nonzero.add(self.y[i as usize]);
            }
            let zeros = total.minus(nonzero);

            // groups of equal value in ascending order, zeros slotted between
            // the negative and positive entries
            let mut groups: Vec<(f64, Stats)> = Vec::new();
            let mut zero_done = zeros.n == 0.0;
            for &(v, i) in &bucket {
                if !zero_done && v > 0.0 {
                    groups.push((0.0, zeros));
                    zero_done = true;
                }
                match groups.last_mut() {
                    Some((gv, st)) if *gv == v => st.add(self.y[i as usize]),
                    _ => {
                        let mut st = Stats::default();
                        st.add(self.y[i as usize]);
                        groups.push((v, st));
                    }
                }
            }
            if !zero_done {
                groups.push((0.0, zeros));
            }

            let mut left = Stats::default();
            for g in 0..groups.len().saturating_sub(1) {
                left = left.plus(groups[g].1);
                let right = total.minus(left);
                if left.n < min_leaf || right.n < min_leaf {
                    continue;
                }
                let score = left.weighted(self.kind) + right.weighted(self.kind);
                let better = match &best {
                    None => true,
                    Some(b) => score < b.score - 1e-12 * total.n.max(1.0),
                };
                if better {
                    best = Some(Candidate {
                        score,
                        feature: j,
                        threshold: 0.5 * (groups[g].0 + groups[g + 1].0),
                    });
                }
            }
            bucket.clear();
            self.buckets[j] = bucket;
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let total = self.stats(&idx);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: self.leaf_value(&total),
            n: idx.len(),
        });
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || idx.len() < 2 * self.params.min_leaf || self.is_pure(&idx) {
            return at;
        }
        let Some(split) = self.best_split(&idx, total) else {
            if depth == 0 {
                log::warn!("no admissible split: identical rows with differing targets");
            }
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.value_of(i, split.feature) <= split.threshold);
        drop(idx);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows a tree on `x` (rows are observations). Labels use gini, scores
/// use mse unless `params.impurity` says otherwise.
pub fn train_tree(x: ArrayView2<'_, f64>, target: Target<'_>, params: &TreeParams) -> Result<TreeModel> {
    let n = x.nrows();
    let (y, kind): (Vec<f64>, Impurity) = match target {
        Target::Labels(l) => (l.iter().map(|&v| v as f64).collect(), Impurity::Gini),
        Target::Scores(s) => (s.to_vec(), Impurity::Mse),
    };
    if y.len() != n {
        return Err(Error::Training(format!("{} targets for {n} rows", y.len())));
    }
    let kind = match (params.impurity, kind) {
        (None, k) => k,
        (Some(p), k) if p == k => k,
        (Some(p), k) => {
            return Err(Error::Config(format!("impurity {p:?} does not fit a {k:?} target")));
        }
    };
    match kind {
        Impurity::Gini => {
            if !(y.contains(&0.0) && y.contains(&1.0)) {
                return Err(Error::Training("tree needs both classes".into()));
            }
        }
        Impurity::Mse => {
            if n < 2 {
                return Err(Error::Training("regression tree needs at least 2 rows".into()));
            }
        }
    }
    if params.min_leaf < 1 {
        return Err(Error::Config("min_leaf must be at least 1".into()));
    }
    let rows = x
        .rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, &v)| (j as u32, v))
                .collect()
        })
        .collect();
    let mut g = Grower {
        rows,
        y: &y,
        kind,
        params,
        nodes: Vec::new(),
        buckets: vec![Vec::new(); x.ncols()],
    };
    g.grow((0..n).collect(), 0);
    Ok(TreeModel {
        nodes: g.nodes,
        impurity: kind,
        n_features: x.ncols(),
    })
}
