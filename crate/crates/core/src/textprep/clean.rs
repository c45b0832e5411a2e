use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{porter, porter2};
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum StemmerKind {
    /// Porter (1980), as in the reference C implementation.
    #[default]
    PorterClassic,
    /// Snowball English.
    Porter2,
}

impl std::str::FromStr for StemmerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "porter" | "porter_classic" | "porterclassic" | "classic" => Ok(StemmerKind::PorterClassic),
            "porter2" | "snowball" | "english" => Ok(StemmerKind::Porter2),
            other => Err(Error::Config(format!("unknown stemmer {other:?}"))),
        }
    }
}

/// Stems a lowercase word with the chosen algorithm.
pub fn stem(word: &str, kind: StemmerKind) -> String {
    match kind {
        StemmerKind::PorterClassic => porter::stem(word),
        StemmerKind::Porter2 => porter2::stem(word),
    }
}

/// Parses a stop-word file: one word per line, `#` starts a comment line.
pub fn parse_stopwords<R: BufRead>(reader: R) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let w = line.trim();
        if w.is_empty() || w.starts_with('#') {
            continue;
        }
        out.insert(w.to_lowercase());
    }
    Ok(out)
}

/// The shipped 175-word English list.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS.as_bytes()).expect("bundled stop-word list")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub stopwords: BTreeSet<String>,
    pub min_word_len: usize,
    pub max_word_len: usize,
    pub stemmer: StemmerKind,
    pub min_stem_count: u64,
    /// `None` is unbounded.
    pub max_stem_count: Option<u64>,
    /// Scale matrix rows to counts per 1,000 tokens. Off by default.
    #[serde(default)]
    pub per_thousand: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            stopwords: default_stopwords(),
            min_word_len: 3,
            max_word_len: 14,
            stemmer: StemmerKind::PorterClassic,
            min_stem_count: 1000,
            max_stem_count: None,
            per_thousand: false,
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_word_len > self.max_word_len {
            return Err(Error::Config(format!(
                "min_word_len {} > max_word_len {}",
                self.min_word_len, self.max_word_len
            )));
        }
        if let Some(max) = self.max_stem_count {
            if max == 0 || self.min_stem_count >= max {
                return Err(Error::Config(format!(
                    "min_stem_count {} must be below max_stem_count {max}",
                    self.min_stem_count
                )));
            }
        }
        Ok(())
    }
}

/// Deletes every codepoint that is neither alphanumeric nor whitespace.
pub fn erase_punctuation(text: &str) -> String {
    text.chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect()
}

/// Runs the cleaning pipeline on one document: punctuation erasure,
/// lowercasing, whitespace tokenization, dropping tokens that are not pure
/// ASCII letters, stop-word removal, the length filter, and stemming.
pub fn clean_document(text: &str, config: &CleanConfig) -> Vec<String> {
    let erased = erase_punctuation(text).to_lowercase();
    erased
        .split_whitespace()
        .filter(|t| t.bytes().all(|b| b.is_ascii_lowercase()))
        .filter(|t| !config.stopwords.contains(*t))
        .filter(|t| (config.min_word_len..=config.max_word_len).contains(&t.len()))
        .map(|t| stem(t, config.stemmer))
        .collect()
}
