use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{CongressSpec, Party, PartySource, SenatorSession, SessionKey};
use crate::error::{Error, Result};

/// One row of the ideology CSV
/// (`congress,speaker_key,party_code,nominate_dim1,nominate_dim2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdeologyRow {
    pub congress: u32,
    pub speaker_key: String,
    pub party: Party,
    pub dim1: Option<f64>,
    pub dim2: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IdeologyReport {
    pub matched: usize,
    pub unmatched: Vec<SessionKey>,
    pub rejected_rows: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    congress: String,
    speaker_key: String,
    party_code: String,
    nominate_dim1: Option<String>,
    nominate_dim2: Option<String>,
}

fn score(field: &Option<String>) -> std::result::Result<Option<f64>, String> {
    match field.as_deref().map(str::trim) {
        None | Some("") | Some("NA") => Ok(None),
        Some(s) => {
            let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(format!("score {v} outside [-1, 1]"));
            }
            Ok(Some(v))
        }
    }
}

/// Reads the ideology CSV. Rows with unparseable fields or scores outside
/// [-1, 1] are rejected with a warning rather than failing the load.
pub fn parse_ideology<R: Read>(reader: R) -> Result<(Vec<IdeologyRow>, IdeologyReport)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    let mut report = IdeologyReport::default();
    for (idx, rec) in rdr.deserialize::<RawRow>().enumerate() {
        let line = idx + 2;
        let raw = rec?;
        let parsed = (|| -> std::result::Result<IdeologyRow, String> {
            Ok(IdeologyRow {
                congress: raw
                    .congress
                    .parse()
                    .map_err(|_| format!("bad congress {:?}", raw.congress))?,
                speaker_key: raw.speaker_key.clone(),
                party: raw.party_code.parse().map_err(|e: Error| e.to_string())?,
                dim1: score(&raw.nominate_dim1)?,
                dim2: score(&raw.nominate_dim2)?,
            })
        })();
        match parsed {
            Ok(r) => rows.push(r),
            Err(msg) => {
                log::warn!("ideology line {line}: {msg}");
                report.rejected_rows += 1;
                report.warnings.push(format!("line {line}: {msg}"));
            }
        }
    }
    Ok((rows, report))
}

impl PartySource {
    /// Party assignments taken from ideology rows. `join_keys` maps
    /// speaker ids to CSV keys; unmapped speakers use their own id.
    pub fn from_ideology(rows: &[IdeologyRow], join_keys: &BTreeMap<String, String>) -> Self {
        let back: BTreeMap<&str, &str> = join_keys
            .iter()
            .map(|(s, k)| (k.as_str(), s.as_str()))
            .collect();
        let mut src = PartySource::new();
        for r in rows {
            let speaker = back.get(r.speaker_key.as_str()).copied().unwrap_or(&r.speaker_key);
            src.insert(speaker, CongressSpec::Only(r.congress), r.party);
        }
        src
    }
}

/// Attaches DW-NOMINATE scores. A legislator has one pair of scores across
/// congresses: the row with the lowest congress for a key supplies it, and
/// disagreeing rows only produce a warning. Party labels and tokens are
/// never touched.
pub fn attach_ideology(
    sessions: &mut [SenatorSession],
    rows: &[IdeologyRow],
    join_keys: &BTreeMap<String, String>,
) -> IdeologyReport {
    let mut report = IdeologyReport::default();
    let mut by_key: BTreeMap<&str, (u32, Option<f64>, Option<f64>)> = BTreeMap::new();
    for r in rows {
        match by_key.get_mut(r.speaker_key.as_str()) {
            None => {
                by_key.insert(&r.speaker_key, (r.congress, r.dim1, r.dim2));
            }
            Some(cur) => {
                if (cur.1, cur.2) != (r.dim1, r.dim2) {
                    report.warnings.push(format!(
                        "{}: scores differ between congress {} and {}; keeping the earlier",
                        r.speaker_key, cur.0, r.congress
                    ));
                }
                if r.congress < cur.0 {
                    *cur = (r.congress, r.dim1, r.dim2);
                }
            }
        }
    }
    for s in sessions.iter_mut() {
        let key = join_keys
            .get(&s.speaker_id)
            .map(String::as_str)
            .unwrap_or(&s.speaker_id);
        match by_key.get(key) {
            Some(&(_, d1, d2)) if d1.is_some() || d2.is_some() => {
                s.dwn1 = d1;
                s.dwn2 = d2;
                report.matched += 1;
            }
            _ => {
                s.dwn1 = None;
                s.dwn2 = None;
                report.unmatched.push(s.key());
            }
        }
    }
    report
}
