use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CleanConfig;
use crate::error::{Error, Result};

/// Corpus-wide stem totals. Merging per-shard maps is associative.
pub fn count_stems<'a, I, S>(streams: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let mut counts = BTreeMap::new();
    for stream in streams {
        for s in stream {
            *counts.entry(s.as_ref().to_string()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn merge_counts(mut a: BTreeMap<String, u64>, b: BTreeMap<String, u64>) -> BTreeMap<String, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Retained stems in rank order with their corpus totals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    stems: Vec<String>,
    index: HashMap<String, usize>,
    total_counts: Vec<u64>,
    cutoffs_applied: (u64, Option<u64>),
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    stems: Vec<String>,
    total_counts: Vec<u64>,
    min_stem_count: u64,
    max_stem_count: Option<u64>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_ranked(
            r.stems.into_iter().zip(r.total_counts).collect(),
            (r.min_stem_count, r.max_stem_count),
        )
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            stems: v.stems,
            total_counts: v.total_counts,
            min_stem_count: v.cutoffs_applied.0,
            max_stem_count: v.cutoffs_applied.1,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.stems == other.stems
            && self.total_counts == other.total_counts
            && self.cutoffs_applied == other.cutoffs_applied
    }
}

impl Vocabulary {
    /// Builds from `(stem, count)` pairs already in rank order.
    pub fn from_ranked(ranked: Vec<(String, u64)>, cutoffs: (u64, Option<u64>)) -> Self {
        let (stems, total_counts): (Vec<String>, Vec<u64>) = ranked.into_iter().unzip();
        let index = stems.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Vocabulary {
            stems,
            index,
            total_counts,
            cutoffs_applied: cutoffs,
        }
    }

    pub fn len(&self) -> usize {
        self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }

    pub fn stems(&self) -> &[String] {
        &self.stems
    }

    pub fn total_counts(&self) -> &[u64] {
        &self.total_counts
    }

    pub fn cutoffs_applied(&self) -> (u64, Option<u64>) {
        self.cutoffs_applied
    }

    pub fn index_of(&self, stem: &str) -> Option<usize> {
        self.index.get(stem).copied()
    }

    pub fn stem(&self, i: usize) -> &str {
        &self.stems[i]
    }

    /// 64-bit hash of the ordered stem list.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        for s in &self.stems {
            h.update(s.as_bytes());
            h.update(b"\n");
        }
        let d = h.finalize();
        u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
    }

    /// TSV of `rank, stem, total_count`, ranks starting at 1.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\tstem\ttotal_count\n");
        for (i, (s, c)) in self.stems.iter().zip(&self.total_counts).enumerate() {
            let _ = writeln!(out, "{}\t{s}\t{c}", i + 1);
        }
        out
    }

    pub fn from_tsv<R: BufRead>(reader: R, cutoffs: (u64, Option<u64>)) -> Result<Self> {
        let mut ranked = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if i == 0 && line.starts_with("rank\t") || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            if f.len() != 3 {
                return Err(bad("expected rank, stem, total_count"));
            }
            let count = f[2].parse().map_err(|_| bad("bad count"))?;
            ranked.push((f[1].to_string(), count));
        }
        Ok(Vocabulary::from_ranked(ranked, cutoffs))
    }
}

/// Applies the frequency cutoffs and ranks by descending count, ties
/// broken lexicographically.
pub fn build_vocabulary(counts: &BTreeMap<String, u64>, config: &CleanConfig) -> Vocabulary {
    let max = config.max_stem_count.unwrap_or(u64::MAX);
    let mut ranked: Vec<(String, u64)> = counts
        .iter()
        .filter(|(_, &c)| c >= config.min_stem_count && c <= max)
        .map(|(s, &c)| (s.clone(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_ranked(ranked, (config.min_stem_count, config.max_stem_count))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub stem_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabHistogram {
    pub unique_stems: usize,
    /// `(threshold, number of stems used more than threshold times)`.
    pub thresholds: Vec<(u64, usize)>,
    pub bins: Vec<HistogramBin>,
}

/// Bins per factor of ten in the log-binned histogram.
pub const BINS_PER_DECADE: u32 = 4;

/// Frequency summary of pre-cutoff stem totals: counts above each threshold
/// and a log-binned histogram over `[10^(i/4), 10^((i+1)/4))`.
pub fn vocab_histogram<I>(total_counts: I, thresholds: &[u64]) -> VocabHistogram
where
    I: IntoIterator<Item = u64>,
{
    let counts: Vec<u64> = total_counts.into_iter().filter(|&c| c > 0).collect();
    let thresholds = thresholds
        .iter()
        .map(|&t| (t, counts.iter().filter(|&&c| c > t).count()))
        .collect();
    let mut bins: Vec<usize> = Vec::new();
    for &c in &counts {
        let mut b = ((c as f64).log10() * BINS_PER_DECADE as f64).floor() as usize;
        // guard against log10 rounding at exact bin edges
        while b > 0 && edge(b) > c as f64 {
            b -= 1;
        }
        while edge(b + 1) <= c as f64 {
            b += 1;
        }
        if bins.len() <= b {
            bins.resize(b + 1, 0);
        }
        bins[b] += 1;
    }
    VocabHistogram {
        unique_stems: counts.len(),
        thresholds,
        bins: bins
            .into_iter()
            .enumerate()
            .map(|(i, n)| HistogramBin {
                lower: edge(i),
                upper: edge(i + 1),
                stem_count: n,
            })
            .collect(),
    }
}

fn edge(i: usize) -> f64 {
    10f64.powf(i as f64 / BINS_PER_DECADE as f64)
}

impl VocabHistogram {
    /// Histogram TSV followed by a `#`-prefixed thresholds block.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_lower\tbin_upper\tstem_count\n");
        for b in &self.bins {
            let _ = writeln!(out, "{:.4}\t{:.4}\t{}", b.lower, b.upper, b.stem_count);
        }
        let _ = writeln!(out, "# unique_stems\t{}", self.unique_stems);
        for (t, n) in &self.thresholds {
            let _ = writeln!(out, "# above\t{t}\t{n}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(s, c)| (s.to_string(), *c)).collect()
    }

    fn cfg(min: u64) -> CleanConfig {
        CleanConfig {
            min_stem_count: min,
            ..Default::default()
        }
    }

    #[test]
    fn cutoff_drops_rare() {
        let v = build_vocabulary(&counts(&[("a", 5), ("b", 1)]), &cfg(2));
        assert_eq!(v.stems(), ["a"]);
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = build_vocabulary(&counts(&[("y", 3), ("x", 3)]), &cfg(1));
        assert_eq!(v.stems(), ["x", "y"]);
    }

    #[test]
    fn upper_cutoff() {
        let c = CleanConfig {
            min_stem_count: 1,
            max_stem_count: Some(4),
            ..Default::default()
        };
        let v = build_vocabulary(&counts(&[("a", 5), ("b", 4), ("c", 1)]), &c);
        assert_eq!(v.stems(), ["b", "c"]);
    }

    #[test]
    fn empty_corpus() {
        assert!(build_vocabulary(&BTreeMap::new(), &cfg(0)).is_empty());
    }

    #[test]
    fn index_is_bijective() {
        let v = build_vocabulary(&counts(&[("a", 5), ("b", 3), ("c", 9)]), &cfg(0));
        for (i, s) in v.stems().iter().enumerate() {
            assert_eq!(v.index_of(s), Some(i));
        }
    }

    #[test]
    fn histogram_thresholds() {
        let h = vocab_histogram([1], &[0]);
        assert_eq!(h.thresholds, vec![(0, 1)]);
        let h = vocab_histogram([10, 10, 1], &[5]);
        assert_eq!(h.thresholds, vec![(5, 2)]);
        assert_eq!(h.unique_stems, 3);
        assert_eq!(h.bins.iter().map(|b| b.stem_count).sum::<usize>(), 3);
        assert_eq!(h.bins[0].stem_count, 1);
        assert_eq!(h.bins[4].stem_count, 2);
    }

    #[test]
    fn tsv_roundtrip_and_fingerprint() {
        let v = build_vocabulary(&counts(&[("a", 5), ("b", 3)]), &cfg(0));
        let back = Vocabulary::from_tsv(v.to_tsv().as_bytes(), v.cutoffs_applied()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.fingerprint(), v.fingerprint());
        let other = build_vocabulary(&counts(&[("b", 5), ("a", 3)]), &cfg(0));
        assert_ne!(other.fingerprint(), v.fingerprint());
    }
}
