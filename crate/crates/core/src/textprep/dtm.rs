use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Vocabulary;
use crate::corpus::{Party, SenatorSession, SessionKey};

/// Row metadata carried alongside the counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub key: SessionKey,
    pub party: Party,
    pub dwn1: Option<f64>,
    pub dwn2: Option<f64>,
    /// Cleaned tokens in the session, in or out of vocabulary.
    pub n_tokens: u64,
}

/// Sparse session x stem counts in CSR layout. Zero entries are never
/// stored and column indices within a row are ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTermMatrix {
    pub rows: Vec<RowMeta>,
    pub vocab: Vocabulary,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    counts: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DtmReport {
    /// Sessions with no in-vocabulary tokens (kept as all-zero rows).
    pub empty_rows: Vec<SessionKey>,
}

impl DocTermMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.vocab.len()
    }

    /// `(column, count)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.counts[span])
            .map(|(&j, &c)| (j as usize, c))
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let span = self.indptr[i]..self.indptr[i + 1];
        let idx = &self.indices[span.clone()];
        match idx.binary_search(&(j as u32)) {
            Ok(p) => self.counts[span.start + p],
            Err(_) => 0,
        }
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.row(i).map(|(_, c)| c as u64).sum()
    }

    pub fn nnz(&self) -> usize {
        self.counts.len()
    }

    /// Dense feature block for the given rows. With `per_thousand`, each
    /// row is scaled to counts per 1,000 cleaned tokens.
    pub fn dense(&self, rows: &[usize], per_thousand: bool) -> Array2<f64> {
        let mut x = Array2::zeros((rows.len(), self.n_cols()));
        for (r, &i) in rows.iter().enumerate() {
            let scale = if per_thousand && self.rows[i].n_tokens > 0 {
                1000.0 / self.rows[i].n_tokens as f64
            } else {
                1.0
            };
            for (j, c) in self.row(i) {
                x[[r, j]] = c as f64 * scale;
            }
        }
        x
    }

    /// Builds from per-row `(column, count)` lists; zero counts are dropped
    /// and columns sorted.
    pub fn from_rows(rows: Vec<RowMeta>, vocab: Vocabulary, entries: Vec<Vec<(u32, u32)>>) -> Self {
        assert_eq!(rows.len(), entries.len());
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut counts = Vec::new();
        for mut e in entries {
            e.sort_unstable_by_key(|&(j, _)| j);
            for (j, c) in e {
                if c > 0 {
                    indices.push(j);
                    counts.push(c);
                }
            }
            indptr.push(indices.len());
        }
        DocTermMatrix {
            rows,
            vocab,
            indptr,
            indices,
            counts,
        }
    }
}

/// Counts each session's in-vocabulary stems. Out-of-vocabulary stems are
/// ignored; sessions left with nothing are kept as zero rows and reported.
pub fn to_doc_term_matrix(sessions: &[SenatorSession], vocab: &Vocabulary) -> (DocTermMatrix, DtmReport) {
    let mut report = DtmReport::default();
    let mut metas = Vec::with_capacity(sessions.len());
    let mut entries = Vec::with_capacity(sessions.len());
    for s in sessions {
        let mut row: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
        for t in &s.token_stems {
            if let Some(j) = vocab.index_of(t) {
                *row.entry(j as u32).or_insert(0) += 1;
            }
        }
        if row.is_empty() {
            report.empty_rows.push(s.key());
        }
        metas.push(RowMeta {
            key: s.key(),
            party: s.party,
            dwn1: s.dwn1,
            dwn2: s.dwn2,
            n_tokens: s.token_stems.len() as u64,
        });
        entries.push(row.into_iter().collect());
    }
    (DocTermMatrix::from_rows(metas, vocab.clone(), entries), report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(stems: &[&str]) -> Vocabulary {
        Vocabulary::from_ranked(stems.iter().map(|s| (s.to_string(), 1)).collect(), (0, None))
    }

    fn session(tokens: &[&str]) -> SenatorSession {
        let mut s = SenatorSession::new("X", 104, Party::Democrat);
        s.token_stems = tokens.iter().map(|t| t.to_string()).collect();
        s
    }

    #[test]
    fn counts_per_row() {
        let (m, rep) = to_doc_term_matrix(&[session(&["vote", "vote", "tax"])], &vocab(&["vote", "tax"]));
        assert_eq!(m.get(0, 0), 2);
        assert_eq!(m.get(0, 1), 1);
        assert!(rep.empty_rows.is_empty());
    }

    #[test]
    fn oov_dropped() {
        let (m, _) = to_doc_term_matrix(&[session(&["vote", "vote", "tax"])], &vocab(&["vote"]));
        assert_eq!(m.n_cols(), 1);
        assert_eq!(m.row_sum(0), 2);
        assert_eq!(m.rows[0].n_tokens, 3);
    }

    #[test]
    fn empty_rows_flagged_and_no_zeros_stored() {
        let (m, rep) = to_doc_term_matrix(&[session(&["zzz"]), session(&["vote"])], &vocab(&["vote"]));
        assert_eq!(rep.empty_rows.len(), 1);
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.dense(&[0, 1], false).sum(), 1.0);
    }

    #[test]
    fn per_thousand_scaling() {
        let (m, _) = to_doc_term_matrix(&[session(&["vote", "tax", "tax", "tax"])], &vocab(&["vote"]));
        assert_eq!(m.dense(&[0], true)[[0, 0]], 250.0);
    }
}
