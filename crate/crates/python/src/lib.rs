//! Python bindings: text cleaning, corpora, count matrices, the
//! cross-session accuracy grid and its diagnostics.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use partyline::classify::{Hyperparams, Method, ModelParams, Task};
use partyline::cli::artifacts::read_corpus;
use partyline::corpus::{Party, SenatorSession};
use partyline::eval::{self, BackwardsScope, EvalData, EvalMatrix, MatrixOptions};
use partyline::synth::{generate, SynthParams};
use partyline::textprep::{self, CleanConfig, StemmerKind};

fn py_err(e: partyline::Error) -> PyErr {
    match e {
        partyline::Error::Config(_) | partyline::Error::Excluded(_) | partyline::Error::Data(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = partyline::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn clean_config(stemmer: &str, min_stem_count: u64) -> PyResult<CleanConfig> {
    Ok(CleanConfig {
        stemmer: parse::<StemmerKind>(stemmer)?,
        min_stem_count,
        ..Default::default()
    })
}

/// Stems one word with `"porter"` (classic) or `"porter2"`.
#[pyfunction]
#[pyo3(signature = (word, stemmer = "porter"))]
fn stem(word: &str, stemmer: &str) -> PyResult<String> {
    Ok(textprep::stem(word, parse(stemmer)?))
}

/// Lowercases, tokenizes, drops stop words and stems a document.
#[pyfunction]
#[pyo3(signature = (text, stemmer = "porter"))]
fn clean_document(text: &str, stemmer: &str) -> PyResult<Vec<String>> {
    Ok(textprep::clean_document(text, &clean_config(stemmer, 0)?))
}

/// Fraction of scores on the right side of zero (negative = Democrat).
#[pyfunction]
fn threshold_validate(predicted: Vec<f64>, parties: Vec<u8>) -> PyResult<f64> {
    if predicted.len() != parties.len() {
        return Err(PyValueError::new_err("predicted and parties differ in length"));
    }
    Ok(eval::threshold_validate(&predicted, &parties))
}

#[pyfunction]
fn lasso_within_adjustment(accuracy: f64) -> f64 {
    eval::lasso_within_adjustment(accuracy)
}

/// Runs the command-line tool in-process and returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    partyline::cli::run(std::iter::once("partyline".to_string()).chain(args))
}

/// One row per senator-session.
#[pyclass(module = "partyline_py")]
struct Corpus {
    sessions: Vec<SenatorSession>,
    planted: Vec<String>,
}

#[pymethods]
impl Corpus {
    /// Generates a corpus with planted party-dependent stems.
    #[staticmethod]
    #[pyo3(signature = (sessions = 10, senators_per_session = 100, vocab_size = 500, planted = 20, effect = 5.0, drift = 0.1, seed = 1))]
    fn synthetic(
        sessions: usize,
        senators_per_session: usize,
        vocab_size: usize,
        planted: usize,
        effect: f64,
        drift: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let params = SynthParams {
            sessions,
            senators_per_session,
            vocab_size,
            planted,
            effect,
            drift,
            seed,
            ..Default::default()
        };
        let corpus = generate(&params).map_err(py_err)?;
        Ok(Corpus {
            planted: corpus.manifest.planted.iter().map(|p| p.stem.clone()).collect(),
            sessions: corpus.sessions,
        })
    }

    /// Reads a `corpus.json` written by the `ingest` or `synth` command.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let archive = read_corpus(&path).map_err(py_err)?;
        Ok(Corpus {
            sessions: archive.sessions,
            planted: Vec::new(),
        })
    }

    fn __len__(&self) -> usize {
        self.sessions.len()
    }

    /// Planted stems of a synthetic corpus; empty otherwise.
    #[getter]
    fn planted_stems(&self) -> Vec<String> {
        self.planted.clone()
    }

    /// `"Democrat"`, `"Republican"` or `"Other"` per row.
    fn parties(&self) -> Vec<String> {
        self.sessions.iter().map(|s| s.party.to_string()).collect()
    }

    fn congresses(&self) -> Vec<u32> {
        self.sessions.iter().map(|s| s.congress).collect()
    }

    fn dwn1(&self) -> Vec<Option<f64>> {
        self.sessions.iter().map(|s| s.dwn1).collect()
    }

    /// Cleans any raw text and builds the count matrix over stems seen at
    /// least `min_stem_count` times.
    #[pyo3(signature = (min_stem_count = 1, stemmer = "porter"))]
    fn document_term_matrix(&self, min_stem_count: u64, stemmer: &str) -> PyResult<DocTermMatrix> {
        let cfg = clean_config(stemmer, min_stem_count)?;
        let mut sessions = self.sessions.clone();
        textprep::clean_sessions(&mut sessions, &cfg);
        let counts = textprep::count_stems(sessions.iter().map(|s| s.token_stems.as_slice()));
        let vocab = textprep::build_vocabulary(&counts, &cfg);
        let (dtm, _) = textprep::to_doc_term_matrix(&sessions, &vocab);
        Ok(DocTermMatrix { inner: dtm })
    }
}

/// Sparse senator-session × stem counts.
#[pyclass(module = "partyline_py")]
struct DocTermMatrix {
    inner: textprep::DocTermMatrix,
}

#[pymethods]
impl DocTermMatrix {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows(), self.inner.n_cols())
    }

    #[getter]
    fn vocabulary(&self) -> Vec<String> {
        self.inner.vocab.stems().to_vec()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<u32> {
        if row >= self.inner.n_rows() || col >= self.inner.n_cols() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(row, col))
    }

    /// Dense counts as a list of rows.
    fn to_dense(&self) -> Vec<Vec<f64>> {
        let rows: Vec<usize> = (0..self.inner.n_rows()).collect();
        self.inner.dense(&rows, false).outer_iter().map(|r| r.to_vec()).collect()
    }

    /// Cross-session accuracy grid for one method (`tree`, `nb`, `svm`,
    /// `lasso`) and task (`party`, `dwn1`). Sessions default to every
    /// congress present.
    #[pyo3(signature = (method, task = "party", sessions = None, folds = 10, seed = 0, threads = 1))]
    #[allow(clippy::too_many_arguments)]
    fn accuracy_matrix(
        &self,
        py: Python<'_>,
        method: &str,
        task: &str,
        sessions: Option<Vec<u32>>,
        folds: usize,
        seed: u64,
        threads: usize,
    ) -> PyResult<AccuracyMatrix> {
        let method: Method = parse(method)?;
        let task: Task = parse(task)?;
        let data = EvalData::from_dtm(&self.inner, false);
        let sessions = sessions.unwrap_or_else(|| {
            let mut c = data.congress.clone();
            c.sort_unstable();
            c.dedup();
            c
        });
        let options = MatrixOptions {
            sessions,
            folds,
            seed,
            threads,
        };
        let hp = Hyperparams {
            lasso: partyline::classify::LassoParams {
                seed,
                ..Default::default()
            },
            ..Default::default()
        };
        let run = py
            .detach(|| eval::run_accuracy_matrix(method, task, &data, &hp, &options, None))
            .map_err(py_err)?;
        let partisan = match run.pooled_models.as_deref() {
            Some([model, ..]) => match &model.params {
                ModelParams::Lasso(l) => partyline::classify::partisan_words(l, &self.inner.vocab, l.beta.len())
                    .map_err(py_err)?,
                _ => Vec::new(),
            },
            _ => Vec::new(),
        };
        Ok(AccuracyMatrix {
            inner: run.matrix,
            partisan,
        })
    }
}

/// Accuracy grid: row 0 and column 0 are the pooled sample, the rest one
/// congress each.
#[pyclass(module = "partyline_py")]
struct AccuracyMatrix {
    inner: EvalMatrix,
    partisan: Vec<(String, f64)>,
}

#[pymethods]
impl AccuracyMatrix {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.axes.iter().map(|a| a.to_string()).collect()
    }

    /// Cells as rows of floats, `None` where a cell could not be computed.
    #[getter]
    fn cells(&self) -> Vec<Vec<Option<f64>>> {
        self.inner.cells.clone()
    }

    fn to_tsv(&self) -> String {
        self.inner.to_tsv()
    }

    fn drift_stddev(&self) -> Option<f64> {
        eval::drift_stddev(&self.inner)
    }

    /// Cells below 0.5 in `"full"`, `"off_diagonal"` or
    /// `"single_session_rows"` scope.
    #[pyo3(signature = (scope = "full"))]
    fn backwards_count(&self, scope: &str) -> PyResult<usize> {
        let scope: BackwardsScope = parse(scope)?;
        Ok(eval::backwards_count(&self.inner, scope).count)
    }

    /// Top `k` stems of the pooled lasso fit by absolute coefficient
    /// (positive leans Republican); empty for other methods.
    #[pyo3(signature = (k = 10))]
    fn partisan_words(&self, k: usize) -> Vec<(String, f64)> {
        self.partisan.iter().take(k).cloned().collect()
    }

    fn __repr__(&self) -> String {
        format!("AccuracyMatrix({}/{}, {}x{})", self.inner.method, self.inner.task, self.inner.size(), self.inner.size())
    }
}

/// Midpoint classifier accuracy of raw scores against party labels
/// (names or single letters), with the boundary halfway between the party means or at
/// a fixed value.
#[pyfunction]
#[pyo3(signature = (scores, parties, midpoint = None))]
fn midpoint_accuracy(scores: Vec<Option<f64>>, parties: Vec<String>, midpoint: Option<f64>) -> PyResult<f64> {
    let parties: Vec<Party> = parties.iter().map(|p| parse(p)).collect::<PyResult<_>>()?;
    let rule = midpoint.map_or(eval::MidpointRule::PartyMeans, eval::MidpointRule::Fixed);
    eval::midpoint_classifier_accuracy(&scores, &parties, rule).map_err(py_err)
}

#[pymodule]
fn partyline_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Corpus>()?;
    m.add_class::<DocTermMatrix>()?;
    m.add_class::<AccuracyMatrix>()?;
    m.add_function(wrap_pyfunction!(stem, m)?)?;
    m.add_function(wrap_pyfunction!(clean_document, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_validate, m)?)?;
    m.add_function(wrap_pyfunction!(lasso_within_adjustment, m)?)?;
    m.add_function(wrap_pyfunction!(midpoint_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
