//! Text cleaning, stemming, vocabulary construction and the sparse
//! document-term matrix.

mod clean;
mod dtm;
pub mod porter;
pub mod porter2;
mod vocab;

pub use clean::{
    clean_document, default_stopwords, erase_punctuation, parse_stopwords, stem, CleanConfig,
    StemmerKind,
};
pub use dtm::{to_doc_term_matrix, DocTermMatrix, DtmReport, RowMeta};
pub use vocab::{
    build_vocabulary, count_stems, merge_counts, vocab_histogram, HistogramBin, VocabHistogram,
    Vocabulary, BINS_PER_DECADE,
};

use rayon::prelude::*;

use crate::corpus::SenatorSession;

/// Fills `token_stems` of every session from its texts. Sessions that
/// already carry stems and no texts are left as they are.
pub fn clean_sessions(sessions: &mut [SenatorSession], config: &CleanConfig) {
    sessions.par_iter_mut().for_each(|s| {
        if s.texts.is_empty() {
            return;
        }
        s.token_stems = s
            .texts
            .iter()
            .flat_map(|t| clean_document(t, config))
            .collect();
    });
}
