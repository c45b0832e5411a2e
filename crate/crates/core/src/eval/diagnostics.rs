//! Summary statistics over completed accuracy grids and ideology scores.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::matrix::EvalMatrix;
use crate::corpus::Party;
use crate::error::{Error, Result};

/// Where the party boundary sits on an ideology axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MidpointRule {
    /// Halfway between the Democratic and Republican mean scores.
    PartyMeans,
    Fixed(f64),
}

/// Classifies `score < midpoint` as Democrat and everything else as
/// Republican. Rows without a score or without a binary party are left out.
pub fn midpoint_classifier_accuracy(scores: &[Option<f64>], parties: &[Party], rule: MidpointRule) -> Result<f64> {
    if scores.len() != parties.len() {
        return Err(Error::Data("scores and parties differ in length".into()));
    }
    let pairs: Vec<(f64, Party)> = scores
        .iter()
        .zip(parties)
        .filter_map(|(s, &p)| s.filter(|_| p.is_binary()).map(|s| (s, p)))
        .collect();
    let mean = |party: Party| -> Option<f64> {
        let v: Vec<f64> = pairs.iter().filter(|(_, p)| *p == party).map(|(s, _)| *s).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let (Some(d), Some(r)) = (mean(Party::Democrat), mean(Party::Republican)) else {
        return Err(Error::Data("both parties need at least one score".into()));
    };
    let midpoint = match rule {
        MidpointRule::PartyMeans => 0.5 * (d + r),
        MidpointRule::Fixed(m) => m,
    };
    let hits = pairs
        .iter()
        .filter(|(s, p)| (*s < midpoint) == (*p == Party::Democrat))
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Accuracy of reading predicted scores as parties: below zero is
/// Democrat, zero and above Republican. Parties are encoded 0 = D, 1 = R.
pub fn threshold_validate(predicted: &[f64], parties: &[u8]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    let hits = predicted
        .iter()
        .zip(parties)
        .filter(|(&s, &p)| u8::from(s >= 0.0) == p)
        .count();
    hits as f64 / predicted.len() as f64
}

/// Which cells of a grid are counted by [`backwards_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackwardsScope {
    /// Every cell.
    #[default]
    Full,
    /// Every cell except the diagonal.
    OffDiagonal,
    /// Rows trained on a single session (all but the first row).
    SingleSessionRows,
}

impl std::str::FromStr for BackwardsScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(BackwardsScope::Full),
            "off_diagonal" => Ok(BackwardsScope::OffDiagonal),
            "single_session_rows" => Ok(BackwardsScope::SingleSessionRows),
            other => Err(Error::Config(format!("unknown backwards scope {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackwardsCount {
    pub count: usize,
    /// In-scope cells skipped because they are absent.
    pub excluded: usize,
}

/// Number of in-scope cells below 0.5.
pub fn backwards_count(matrix: &EvalMatrix, scope: BackwardsScope) -> BackwardsCount {
    let mut count = 0;
    let mut excluded = 0;
    for (t, row) in matrix.cells.iter().enumerate() {
        for (u, cell) in row.iter().enumerate() {
            let in_scope = match scope {
                BackwardsScope::Full => true,
                BackwardsScope::OffDiagonal => t != u,
                BackwardsScope::SingleSessionRows => t != 0,
            };
            if !in_scope {
                continue;
            }
            match cell {
                Some(v) if *v < 0.5 => count += 1,
                Some(_) => {}
                None => excluded += 1,
            }
        }
    }
    BackwardsCount { count, excluded }
}

/// Sample standard deviation (divisor `n − 1`), computed on values shifted
/// by the first one so that a constant row gives exactly zero.
fn sample_std(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let n = v.len() as f64;
    let d: Vec<f64> = v.iter().map(|x| x - v[0]).collect();
    let s: f64 = d.iter().sum();
    let ss: f64 = d.iter().map(|x| x * x).sum();
    Some(((ss - s * s / n) / (n - 1.0)).max(0.0).sqrt())
}

/// Mean over single-session training rows of the standard deviation of the
/// row's single-session test cells. The deviation uses the `n − 1` divisor.
/// Absent cells are skipped; a row with fewer than two present cells is
/// left out. `None` when no row qualifies.
pub fn drift_stddev(matrix: &EvalMatrix) -> Option<f64> {
    let stds: Vec<f64> = matrix
        .cells
        .iter()
        .skip(1)
        .filter_map(|row| {
            let v: Vec<f64> = row.iter().skip(1).filter_map(|c| *c).collect();
            sample_std(&v)
        })
        .collect();
    (!stds.is_empty()).then(|| stds.iter().sum::<f64>() / stds.len() as f64)
}

/// How far a within-sample accuracy beats 0.9, on a 0–1 scale: `(acc − 0.9) × 10`.
pub fn lasso_within_adjustment(acc: f64) -> f64 {
    (acc - 0.9) * 10.0
}

/// Key-value summary of a set of grids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub entries: Vec<(String, String)>,
}

impl DiagnosticsReport {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Adds backwards counts, drift and (for the lasso) within-sample
    /// adjustments for one grid.
    pub fn add_matrix(&mut self, m: &EvalMatrix, scope: BackwardsScope) {
        let prefix = format!("{}.{}", m.method, m.task);
        let b = backwards_count(m, scope);
        self.push(format!("{prefix}.absent_cells"), m.absent_cells());
        self.push(format!("{prefix}.backwards_count"), b.count);
        self.push(format!("{prefix}.backwards_excluded"), b.excluded);
        match drift_stddev(m) {
            Some(d) => self.push(format!("{prefix}.drift_stddev"), format!("{d:.4}")),
            None => self.push(format!("{prefix}.drift_stddev"), "NA"),
        }
        if m.method == crate::classify::Method::Lasso {
            for (t, a) in m.axes.iter().enumerate() {
                if let Some(v) = m.cells[t][t] {
                    self.push(format!("{prefix}.within_adjusted.{a}"), format!("{:.4}", lasso_within_adjustment(v)));
                }
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}
