use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{Party, SenatorSession, SessionKey, SpeechRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CongressSpec {
    Any,
    Only(u32),
}

impl CongressSpec {
    pub fn matches(self, congress: u32) -> bool {
        match self {
            CongressSpec::Any => true,
            CongressSpec::Only(c) => c == congress,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyOverride {
    pub speaker_id: String,
    pub congress: CongressSpec,
    pub party: Party,
}

/// Reads `speaker_key<TAB>congress-or-*<TAB>party` lines. Blank lines and
/// `#` comments are ignored.
pub fn parse_overrides<R: BufRead>(reader: R) -> Result<Vec<PartyOverride>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = t.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let congress = match fields[1].trim() {
            "*" => CongressSpec::Any,
            c => CongressSpec::Only(
                c.parse()
                    .map_err(|_| parse_err(format!("bad congress {c:?}")))?,
            ),
        };
        let party = fields[2]
            .parse()
            .map_err(|e: Error| parse_err(e.to_string()))?;
        out.push(PartyOverride {
            speaker_id: fields[0].trim().to_string(),
            congress,
            party,
        });
    }
    Ok(out)
}

/// Speaker -> party assignments from speech metadata or a side file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PartySource {
    entries: BTreeMap<String, Vec<(CongressSpec, Party)>>,
}

impl PartySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, speaker_id: impl Into<String>, congress: CongressSpec, party: Party) {
        let list = self.entries.entry(speaker_id.into()).or_default();
        if !list.contains(&(congress, party)) {
            list.push((congress, party));
        }
    }

    /// Distinct parties recorded for this speaker in this congress. Entries
    /// for the exact congress shadow wildcard entries.
    pub fn lookup(&self, speaker_id: &str, congress: u32) -> BTreeSet<Party> {
        let Some(list) = self.entries.get(speaker_id) else {
            return BTreeSet::new();
        };
        let exact: BTreeSet<Party> = list
            .iter()
            .filter(|(c, _)| *c == CongressSpec::Only(congress))
            .map(|(_, p)| *p)
            .collect();
        if !exact.is_empty() {
            return exact;
        }
        list.iter()
            .filter(|(c, _)| *c == CongressSpec::Any)
            .map(|(_, p)| *p)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyConflict {
    pub key: SessionKey,
    pub parties: Vec<Party>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AggregateReport {
    pub conflicts: Vec<PartyConflict>,
    /// Sessions whose party could not be resolved (labelled `Other`).
    pub unresolved: Vec<SessionKey>,
}

fn override_for(overrides: &[PartyOverride], speaker: &str, congress: u32) -> Option<Party> {
    let exact = overrides
        .iter()
        .rev()
        .find(|o| o.speaker_id == speaker && o.congress == CongressSpec::Only(congress));
    exact
        .or_else(|| {
            overrides
                .iter()
                .rev()
                .find(|o| o.speaker_id == speaker && o.congress == CongressSpec::Any)
        })
        .map(|o| o.party)
}

/// Groups speeches into senator-sessions keyed by (speaker, congress).
///
/// Output is sorted by key and speeches inside a session are ordered by
/// date and then by content, so the result does not depend on input order.
/// Party comes from `party_source`; overrides win over it (an exact-congress
/// override wins over a wildcard one). Sessions with no or conflicting party
/// information end up as `Party::Other`.
pub fn aggregate_sessions(
    records: &[SpeechRecord],
    overrides: &[PartyOverride],
    party_source: &PartySource,
) -> (Vec<SenatorSession>, AggregateReport) {
    let mut groups: BTreeMap<(String, u32), Vec<&SpeechRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.speaker.clone(), r.congress))
            .or_default()
            .push(r);
    }

    let mut report = AggregateReport::default();
    let mut sessions = Vec::with_capacity(groups.len());
    for ((speaker, congress), mut recs) in groups {
        recs.sort_by(|a, b| {
            (a.date, &a.pages, &a.heading, &a.text).cmp(&(b.date, &b.pages, &b.heading, &b.text))
        });
        let key = SessionKey {
            speaker_id: speaker.clone(),
            congress,
        };
        let candidates = party_source.lookup(&speaker, congress);
        let party = match override_for(overrides, &speaker, congress) {
            Some(p) => p,
            None if candidates.len() == 1 => *candidates.iter().next().unwrap(),
            None if candidates.len() > 1 => {
                report.conflicts.push(PartyConflict {
                    key: key.clone(),
                    parties: candidates.iter().copied().collect(),
                });
                Party::Other
            }
            None => {
                report.unresolved.push(key.clone());
                Party::Other
            }
        };
        let mut s = SenatorSession::new(speaker, congress, party);
        s.texts = recs.iter().map(|r| r.text.clone()).collect();
        sessions.push(s);
    }
    (sessions, report)
}
