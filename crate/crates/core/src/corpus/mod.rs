//! Speech records, senator-sessions and the ingestion steps that connect
//! them: parsing, grouping by (speaker, congress), party resolution and
//! ideology-score attachment.

mod aggregate;
mod ideology;
mod parse;
mod report;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate_sessions, parse_overrides, AggregateReport, CongressSpec, PartyConflict,
    PartyOverride, PartySource,
};
pub use ideology::{attach_ideology, parse_ideology, IdeologyReport, IdeologyRow};
pub use report::{top_words, RowSelector};
pub use parse::{
    parse_speeches, speaker_key, FormatConfig, InputFormat, ParseReport, RowError,
    DEFAULT_EXCLUSIONS,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chamber {
    Senate,
    House,
}

impl FromStr for Chamber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "senate" => Ok(Chamber::Senate),
            "house" => Ok(Chamber::House),
            other => Err(Error::Data(format!("unknown chamber {other:?}"))),
        }
    }
}

/// Party label. The derived ordering is lexicographic on the names, so
/// `Democrat < Republican`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Democrat,
    Republican,
    Other,
}

impl Party {
    pub fn is_binary(self) -> bool {
        matches!(self, Party::Democrat | Party::Republican)
    }

    /// D = 0, R = 1; `None` for `Other`.
    pub fn as_binary(self) -> Option<u8> {
        match self {
            Party::Democrat => Some(0),
            Party::Republican => Some(1),
            Party::Other => None,
        }
    }

    pub fn from_binary(v: u8) -> Party {
        if v == 0 {
            Party::Democrat
        } else {
            Party::Republican
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Party::Democrat => "D",
            Party::Republican => "R",
            Party::Other => "O",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Democrat => "Democrat",
            Party::Republican => "Republican",
            Party::Other => "Other",
        })
    }
}

impl FromStr for Party {
    type Err = Error;

    /// Accepts names, single letters and voteview party codes (100 = D,
    /// 200 = R, anything else numeric = Other).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "d" | "dem" | "democrat" | "democratic" | "100" => Ok(Party::Democrat),
            "r" | "rep" | "republican" | "200" => Ok(Party::Republican),
            "o" | "i" | "other" | "independent" | "ind" => Ok(Party::Other),
            _ if !t.is_empty() && t.chars().all(|c| c.is_ascii_digit()) => Ok(Party::Other),
            _ => Err(Error::Data(format!("unknown party {t:?}"))),
        }
    }
}

/// One speech from the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechRecord {
    pub volume: u32,
    pub issue: u32,
    pub chamber: Chamber,
    pub pages: String,
    pub congress: u32,
    pub session_within_congress: u8,
    pub date: NaiveDate,
    pub heading: String,
    /// Normalized speaker key (uppercase surname, optional `:STATE`).
    pub speaker: String,
    pub text: String,
}

/// Calendar years covered by a congress: congress `c` spans `1787 + 2c` and
/// `1788 + 2c`.
pub fn congress_years(congress: u32) -> (i32, i32) {
    let first = 1787 + 2 * congress as i32;
    (first, first + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionKey {
    pub speaker_id: String,
    pub congress: u32,
}

impl fmt::Display for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.speaker_id, self.congress)
    }
}

/// A senator within one congress: the unit of analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenatorSession {
    pub speaker_id: String,
    pub congress: u32,
    pub party: Party,
    pub dwn1: Option<f64>,
    pub dwn2: Option<f64>,
    /// Raw speech bodies, ordered by date.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub texts: Vec<String>,
    /// Cleaned stems; empty until the text pipeline runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub token_stems: Vec<String>,
}

impl SenatorSession {
    pub fn new(speaker_id: impl Into<String>, congress: u32, party: Party) -> Self {
        SenatorSession {
            speaker_id: speaker_id.into(),
            congress,
            party,
            dwn1: None,
            dwn2: None,
            texts: Vec::new(),
            token_stems: Vec::new(),
        }
    }

    pub fn key(&self) -> SessionKey {
        SessionKey {
            speaker_id: self.speaker_id.clone(),
            congress: self.congress,
        }
    }
}
