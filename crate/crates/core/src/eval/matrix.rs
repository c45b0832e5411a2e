use std::fmt::Write as _;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::protocol::{
    out_of_sample_accuracy, splitmix64, within_sample_accuracy, FittedRow, LeakageTracker, TrainingSet,
};
use crate::classify::{Hyperparams, Method, Task, TrainedModel};
use crate::corpus::Party;
use crate::error::{Error, Result};
use crate::textprep::DocTermMatrix;

/// Dense evaluation data: one row per senator-session.
#[derive(Debug, Clone)]
pub struct EvalData {
    pub x: Array2<f64>,
    pub parties: Vec<Party>,
    pub dwn1: Vec<Option<f64>>,
    pub congress: Vec<u32>,
    pub vocab_fingerprint: u64,
}

impl EvalData {
    pub fn from_dtm(dtm: &DocTermMatrix, per_thousand: bool) -> Self {
        let rows: Vec<usize> = (0..dtm.n_rows()).collect();
        EvalData {
            x: dtm.dense(&rows, per_thousand),
            parties: dtm.rows.iter().map(|r| r.party).collect(),
            dwn1: dtm.rows.iter().map(|r| r.dwn1).collect(),
            congress: dtm.rows.iter().map(|r| r.key.congress).collect(),
            vocab_fingerprint: dtm.vocab.fingerprint(),
        }
    }

    /// Rows usable for `task` within `session` (`None` = pooled): a binary
    /// party, plus an ideology score for the score task.
    pub fn eligible(&self, task: Task, session: Option<u32>) -> Vec<usize> {
        (0..self.parties.len())
            .filter(|&i| self.parties[i].is_binary())
            .filter(|&i| task == Task::Party || self.dwn1[i].is_some())
            .filter(|&i| session.is_none_or(|s| self.congress[i] == s))
            .collect()
    }
}

/// Axis label: the pooled sample or one congress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisLabel {
    All,
    Session(u32),
}

impl AxisLabel {
    pub fn session(self) -> Option<u32> {
        match self {
            AxisLabel::All => None,
            AxisLabel::Session(s) => Some(s),
        }
    }

    /// Stable numeric code for seed derivation (0 for the pooled sample).
    fn code(self) -> u64 {
        match self {
            AxisLabel::All => 0,
            AxisLabel::Session(s) => s as u64,
        }
    }
}

impl std::fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisLabel::All => f.write_str("All"),
            AxisLabel::Session(s) => write!(f, "{s}"),
        }
    }
}

/// Square accuracy grid: rows are training samples, columns test samples,
/// both ordered `[All, s_lo, …, s_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix {
    pub method: Method,
    pub task: Task,
    pub axes: Vec<AxisLabel>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl EvalMatrix {
    pub fn axes_for(sessions: &[u32]) -> Vec<AxisLabel> {
        std::iter::once(AxisLabel::All)
            .chain(sessions.iter().map(|&s| AxisLabel::Session(s)))
            .collect()
    }

    pub fn from_values(method: Method, task: Task, axes: Vec<AxisLabel>, values: Vec<Vec<f64>>) -> Self {
        EvalMatrix {
            method,
            task,
            axes,
            cells: values.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.axes.len()
    }

    pub fn absent_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// Header of test labels, one row per training label, four decimals,
    /// `NA` for absent cells.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("train\\test");
        for a in &self.axes {
            write!(out, "\t{a}").unwrap();
        }
        out.push('\n');
        for (a, row) in self.axes.iter().zip(&self.cells) {
            write!(out, "{a}").unwrap();
            for c in row {
                match c {
                    Some(v) => write!(out, "\t{v:.4}").unwrap(),
                    None => out.push_str("\tNA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the layout written by [`EvalMatrix::to_tsv`].
    pub fn from_tsv(method: Method, task: Task, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Data("empty matrix file".into()))?;
        let parse_label = |s: &str| -> Result<AxisLabel> {
            let t = s.trim().trim_end_matches("th");
            if t.eq_ignore_ascii_case("all") {
                Ok(AxisLabel::All)
            } else {
                t.parse()
                    .map(AxisLabel::Session)
                    .map_err(|_| Error::Data(format!("bad axis label {s:?}")))
            }
        };
        let axes: Vec<AxisLabel> = header.split('\t').skip(1).map(parse_label).collect::<Result<_>>()?;
        let mut cells = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut fields = line.split('\t');
            let label = parse_label(fields.next().unwrap_or(""))?;
            if label != axes[n.min(axes.len() - 1)] {
                return Err(Error::Parse {
                    line: n + 2,
                    message: format!("row label {label} out of order"),
                });
            }
            let row: Vec<Option<f64>> = fields
                .map(|f| {
                    let f = f.trim();
                    if f == "NA" {
                        Ok(None)
                    } else {
                        f.parse().map(Some).map_err(|_| Error::Parse {
                            line: n + 2,
                            message: format!("bad cell {f:?}"),
                        })
                    }
                })
                .collect::<Result<_>>()?;
            if row.len() != axes.len() {
                return Err(Error::Parse {
                    line: n + 2,
                    message: format!("{} cells, expected {}", row.len(), axes.len()),
                });
            }
            cells.push(row);
        }
        if cells.len() != axes.len() {
            return Err(Error::Data(format!("{} rows for {} axis labels", cells.len(), axes.len())));
        }
        Ok(EvalMatrix { method, task, axes, cells })
    }
}

/// Settings shared by every cell of a matrix run.
#[derive(Debug, Clone)]
pub struct MatrixOptions {
    pub sessions: Vec<u32>,
    pub folds: usize,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug)]
pub struct MatrixRun {
    pub matrix: EvalMatrix,
    /// Models fitted on the pooled sample, if that row succeeded.
    pub pooled_models: Option<Vec<TrainedModel>>,
    /// Training rows that failed, with the reason.
    pub row_failures: Vec<(AxisLabel, String)>,
    /// Whether any failure was a solver non-convergence.
    pub nonconvergence: bool,
    /// Fits that returned without meeting their tolerance.
    pub unconverged_fits: usize,
}

/// Seed for one training row, independent of scheduling.
pub fn row_seed(seed: u64, label: AxisLabel) -> u64 {
    splitmix64(seed ^ splitmix64(label.code()))
}

fn unconverged(models: &[TrainedModel]) -> usize {
    use crate::classify::ModelParams;
    models
        .iter()
        .filter(|m| matches!(&m.params, ModelParams::Svm(s) if !s.converged))
        .count()
}

/// Builds the full grid. Rows run in parallel on a pool of
/// `options.threads` workers; every row's randomness derives from
/// `(seed, training label)`, so the result does not depend on scheduling.
/// A row whose training fails is emitted as absent cells.
pub fn run_accuracy_matrix(
    method: Method,
    task: Task,
    data: &EvalData,
    hp: &Hyperparams,
    options: &MatrixOptions,
    tracker: Option<&LeakageTracker>,
) -> Result<MatrixRun> {
    if !method.supports(task) {
        return Err(Error::Excluded(
            "naive Bayes has no ideology-score analogue, so nb/dwn1 is not produced".into(),
        ));
    }
    if task == Task::Dwn1 && data.dwn1.iter().all(Option::is_none) {
        return Err(Error::Data("the dwn1 task needs ideology scores, and none are attached".into()));
    }
    hp.validate()?;
    let axes = EvalMatrix::axes_for(&options.sessions);
    let eligible: Vec<Vec<usize>> = axes.iter().map(|a| data.eligible(task, a.session())).collect();
    let parties: Vec<u8> = data.parties.iter().map(|p| p.as_binary().unwrap_or(u8::MAX)).collect();
    let scores: Vec<f64> = data.dwn1.iter().map(|d| d.unwrap_or(f64::NAN)).collect();

    let row_job = |t: usize| -> (Vec<Option<f64>>, Option<FittedRow>, Option<Error>) {
        let idx = &eligible[t];
        let x = data.x.select(Axis(0), idx);
        let p: Vec<u8> = idx.iter().map(|&i| parties[i]).collect();
        let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let set = TrainingSet {
            x: x.view(),
            parties: &p,
            scores: (task == Task::Dwn1).then_some(&s[..]),
        };
        let seed = row_seed(options.seed, axes[t]);
        let fitted = within_sample_accuracy(method, task, &set, hp, options.folds, seed, data.vocab_fingerprint, tracker);
        let fitted = match fitted {
            Ok(f) => f,
            Err(e) => return (vec![None; axes.len()], None, Some(e)),
        };
        let mut row = Vec::with_capacity(axes.len());
        for (u, cols) in eligible.iter().enumerate() {
            if u == t {
                row.push(Some(fitted.within));
                continue;
            }
            if cols.is_empty() {
                row.push(None);
                continue;
            }
            let xt = data.x.select(Axis(0), cols);
            let pt: Vec<u8> = cols.iter().map(|&i| parties[i]).collect();
            row.push(out_of_sample_accuracy(&fitted.models, xt.view(), &pt).ok());
        }
        (row, Some(fitted), None)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| (0..axes.len()).into_par_iter().map(row_job).collect());

    let mut cells = Vec::with_capacity(axes.len());
    let mut pooled_models = None;
    let mut row_failures = Vec::new();
    let mut nonconvergence = false;
    let mut unconverged_fits = 0;
    for (t, (row, fitted, err)) in results.into_iter().enumerate() {
        if let Some(e) = err {
            nonconvergence |= matches!(e, Error::NonConvergence(_));
            log::warn!("training row {} failed: {e}", axes[t]);
            row_failures.push((axes[t], e.to_string()));
        }
        if let Some(f) = fitted {
            unconverged_fits += unconverged(&f.models);
            if t == 0 {
                pooled_models = Some(f.models);
            }
        }
        cells.push(row);
    }
    Ok(MatrixRun {
        matrix: EvalMatrix {
            method,
            task,
            axes,
            cells,
        },
        pooled_models,
        row_failures,
        nonconvergence,
        unconverged_fits,
    })
}

/// [`run_accuracy_matrix`] without the side results.
pub fn build_accuracy_matrix(
    method: Method,
    task: Task,
    data: &EvalData,
    hp: &Hyperparams,
    options: &MatrixOptions,
) -> Result<EvalMatrix> {
    Ok(run_accuracy_matrix(method, task, data, hp, options, None)?.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_roundtrip() {
        let axes = EvalMatrix::axes_for(&[104, 105]);
        let mut m = EvalMatrix::from_values(
            Method::Tree,
            Task::Party,
            axes,
            vec![vec![0.5, 0.25, 1.0], vec![0.12345, 0.9, 0.8], vec![0.0, 0.1, 0.2]],
        );
        m.cells[2][1] = None;
        let tsv = m.to_tsv();
        assert!(tsv.starts_with("train\\test\tAll\t104\t105\n"));
        assert!(tsv.contains("104\t0.1235\t0.9000\t0.8000\n") || tsv.contains("104\t0.1234\t0.9000\t0.8000\n"));
        assert!(tsv.contains("\tNA\t"));
        let back = EvalMatrix::from_tsv(Method::Tree, Task::Party, &tsv).unwrap();
        assert_eq!(back.cells[2][1], None);
        assert_eq!(back.cells[0][1], Some(0.25));
    }
}
