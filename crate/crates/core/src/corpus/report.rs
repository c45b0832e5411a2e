use serde::{Deserialize, Serialize};

use super::Party;
use crate::textprep::DocTermMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSelector {
    All,
    Party(Party),
    Congress(u32),
}

impl RowSelector {
    pub fn matches(&self, meta: &crate::textprep::RowMeta) -> bool {
        match *self {
            RowSelector::All => true,
            RowSelector::Party(p) => meta.party == p,
            RowSelector::Congress(c) => meta.key.congress == c,
        }
    }
}

/// Top `k` stems by summed count over the selected rows, ties broken
/// lexicographically. Stems with zero count in the selection are omitted.
pub fn top_words(dtm: &DocTermMatrix, selector: RowSelector, k: usize) -> Vec<(String, u64)> {
    let mut totals = vec![0u64; dtm.n_cols()];
    for (i, meta) in dtm.rows.iter().enumerate() {
        if selector.matches(meta) {
            for (j, c) in dtm.row(i) {
                totals[j] += c as u64;
            }
        }
    }
    let mut ranked: Vec<(String, u64)> = totals
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(j, c)| (dtm.vocab.stem(j).to_string(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}
