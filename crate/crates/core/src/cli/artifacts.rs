//! Versioned, fingerprinted artifacts exchanged between commands.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SenatorSession;
use crate::error::{Error, Result};
use crate::textprep::{CleanConfig, DocTermMatrix};

pub const ARTIFACT_VERSION: u32 = 1;

pub const CORPUS_FILE: &str = "corpus.json";
pub const DTM_FILE: &str = "dtm.json";

/// Accumulates a SHA-256 over labelled parts; the fingerprint is the first
/// 16 hex digits.
#[derive(Default)]
pub struct Fingerprinter(Sha256);

impl Fingerprinter {
    pub fn new(domain: &str) -> Self {
        let mut f = Fingerprinter(Sha256::new());
        f.part("domain", domain.as_bytes());
        f
    }

    pub fn part(&mut self, label: &str, bytes: &[u8]) -> &mut Self {
        self.0.update((label.len() as u64).to_le_bytes());
        self.0.update(label.as_bytes());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
        self
    }

    pub fn json<T: Serialize>(&mut self, label: &str, value: &T) -> Result<&mut Self> {
        let s = serde_json::to_vec(value)?;
        Ok(self.part(label, &s))
    }

    /// Hashes a file's contents, or the marker `absent` for `None`.
    pub fn file(&mut self, label: &str, path: Option<&Path>) -> Result<&mut Self> {
        match path {
            None => Ok(self.part(label, b"absent")),
            Some(p) => {
                let mut h = Sha256::new();
                let mut f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
                let mut buf = vec![0u8; 1 << 16];
                loop {
                    let n = f.read(&mut buf).map_err(|e| Error::io(p, e))?;
                    if n == 0 {
                        break;
                    }
                    h.update(&buf[..n]);
                }
                let digest = h.finalize();
                Ok(self.part(label, &digest))
            }
        }
    }

    pub fn finish(&self) -> String {
        let d = self.0.clone().finalize();
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusSource {
    Ingest,
    Synth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusArchive {
    pub format_version: u32,
    pub fingerprint: String,
    pub source: CorpusSource,
    pub sessions: Vec<SenatorSession>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtmArchive {
    pub format_version: u32,
    pub fingerprint: String,
    pub corpus_fingerprint: String,
    pub dtm: DocTermMatrix,
}

/// Fingerprint of a cleaning run: the corpus it read plus every setting
/// that affects the output.
pub fn clean_fingerprint(corpus_fingerprint: &str, config: &CleanConfig) -> Result<String> {
    let mut f = Fingerprinter::new("clean");
    f.part("corpus", corpus_fingerprint.as_bytes());
    f.json("config", config)?;
    Ok(f.finish())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let v = serde_json::from_reader(std::io::BufReader::new(f))
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok(v)
}

fn check_version(path: &Path, found: u32) -> Result<()> {
    if found != ARTIFACT_VERSION {
        return Err(Error::StaleArtifact {
            path: path.to_path_buf(),
            found: format!("format version {found}"),
            expected: format!("format version {ARTIFACT_VERSION}"),
        });
    }
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<CorpusArchive> {
    let a: CorpusArchive = read_json(path)?;
    check_version(path, a.format_version)?;
    Ok(a)
}

pub fn read_dtm(path: &Path) -> Result<DtmArchive> {
    let a: DtmArchive = read_json(path)?;
    check_version(path, a.format_version)?;
    Ok(a)
}

/// Refuses an artifact whose fingerprint differs from the one the current
/// configuration would produce.
pub fn ensure_fresh(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::StaleArtifact {
            path: PathBuf::from(path),
            found: found.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok(())
}
