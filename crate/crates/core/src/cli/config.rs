//! Run configuration: a TOML file with top-level run keys followed by
//! `[paths]`, `[ingest]`, `[clean]`, `[tree]`, `[nb]`, `[svm]`, `[lasso]`
//! and `[synth]` sections. Every key is optional; command-line flags
//! override the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{Hyperparams, LassoParams, Method, NbParams, SvmParams, Task, TreeParams};
use crate::corpus::{FormatConfig, InputFormat, DEFAULT_EXCLUSIONS};
use crate::error::{Error, Result};
use crate::eval::BackwardsScope;
use crate::synth::SynthParams;
use crate::textprep::{default_stopwords, parse_stopwords, CleanConfig, StemmerKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub speeches: Option<PathBuf>,
    pub ideology: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Two tab-separated columns: speaker id, ideology-file key.
    pub join_keys: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub format: InputFormat,
    pub exclusions: Vec<String>,
    pub speaker_aliases: BTreeMap<String, String>,
    pub max_malformed_fraction: f64,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            format: InputFormat::Tsv,
            exclusions: DEFAULT_EXCLUSIONS.iter().map(|s| s.to_string()).collect(),
            speaker_aliases: BTreeMap::new(),
            max_malformed_fraction: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanSection {
    pub min_word_len: usize,
    pub max_word_len: usize,
    pub stemmer: String,
    pub min_stem_count: u64,
    pub max_stem_count: Option<u64>,
    pub per_thousand: bool,
}

impl Default for CleanSection {
    fn default() -> Self {
        CleanSection {
            min_word_len: 3,
            max_word_len: 14,
            stemmer: "porter".into(),
            min_stem_count: 1000,
            max_stem_count: None,
            per_thousand: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub threads: usize,
    pub methods: Vec<Method>,
    pub tasks: Vec<Task>,
    pub session_range: [u32; 2],
    pub folds: usize,
    pub backwards_scope: BackwardsScope,
    pub histogram_thresholds: Vec<u64>,
    pub top_k: usize,
    pub partisan_k: usize,
    pub paths: PathsSection,
    pub ingest: IngestSection,
    pub clean: CleanSection,
    pub tree: TreeParams,
    pub nb: NbParams,
    pub svm: SvmParams,
    pub lasso: LassoParams,
    pub synth: SynthParams,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            seed: 0,
            threads: 1,
            methods: Method::ALL.to_vec(),
            tasks: vec![Task::Party, Task::Dwn1],
            session_range: [104, 113],
            folds: 10,
            backwards_scope: BackwardsScope::Full,
            histogram_thresholds: vec![100, 1000, 10000],
            top_k: 10,
            partisan_k: 50,
            paths: PathsSection::default(),
            ingest: IngestSection::default(),
            clean: CleanSection::default(),
            tree: TreeParams::default(),
            nb: NbParams::default(),
            svm: SvmParams::default(),
            lasso: LassoParams::default(),
            synth: SynthParams::default(),
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    /// Directory relative input paths are resolved against.
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub clean: CleanConfig,
    pub hyperparams: Hyperparams,
}

/// Overrides that come from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, flags: &FlagOverrides) -> Result<Self> {
        let (file, base_dir) = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let file: ConfigFile =
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (file, dir)
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        Self::from_file(file, base_dir, flags)
    }

    pub fn from_file(mut file: ConfigFile, base_dir: PathBuf, flags: &FlagOverrides) -> Result<Self> {
        if let Some(s) = flags.seed {
            file.seed = s;
        }
        if let Some(t) = flags.threads {
            file.threads = t;
        }
        let out_dir = match &flags.out {
            Some(o) => o.clone(),
            None => base_dir.join(file.paths.out.as_deref().unwrap_or(Path::new("out"))),
        };
        if file.threads < 1 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        let [lo, hi] = file.session_range;
        if lo > hi {
            return Err(Error::Config(format!("session_range [{lo}, {hi}] is reversed")));
        }
        if file.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        let stopwords = match &file.paths.stopwords {
            Some(p) => {
                let p = base_dir.join(p);
                let f = fs::File::open(&p).map_err(|e| Error::io(&p, e))?;
                parse_stopwords(std::io::BufReader::new(f))?
            }
            None => default_stopwords(),
        };
        let clean = CleanConfig {
            stopwords,
            min_word_len: file.clean.min_word_len,
            max_word_len: file.clean.max_word_len,
            stemmer: file.clean.stemmer.parse::<StemmerKind>()?,
            min_stem_count: file.clean.min_stem_count,
            max_stem_count: file.clean.max_stem_count,
            per_thousand: file.clean.per_thousand,
        };
        clean.validate()?;
        let mut hyperparams = Hyperparams {
            tree: file.tree.clone(),
            nb: file.nb.clone(),
            svm: file.svm.clone(),
            lasso: file.lasso.clone(),
        };
        hyperparams.lasso.seed = file.seed;
        hyperparams.validate()?;
        file.synth.seed = file.seed;
        Ok(RunConfig {
            file,
            base_dir,
            out_dir,
            clean,
            hyperparams,
        })
    }

    pub fn input(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        p.as_ref().map(|p| self.base_dir.join(p))
    }

    pub fn sessions(&self) -> Vec<u32> {
        let [lo, hi] = self.file.session_range;
        (lo..=hi).collect()
    }

    pub fn format_config(&self) -> FormatConfig {
        FormatConfig {
            format: self.file.ingest.format,
            congress_range: (self.file.session_range[0], self.file.session_range[1]),
            exclusions: self.file.ingest.exclusions.clone(),
            speaker_aliases: self.file.ingest.speaker_aliases.clone(),
            max_malformed_fraction: self.file.ingest.max_malformed_fraction,
        }
    }
}
