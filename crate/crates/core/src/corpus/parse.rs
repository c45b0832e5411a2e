use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::NaiveDate;
use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::{congress_years, Chamber, SpeechRecord};
use crate::error::{Error, Result};

/// Headings treated as procedural when no exclusion list is configured.
pub const DEFAULT_EXCLUSIONS: &[&str] = &["PRAYER", "PLEDGE OF ALLEGIANCE", "RECESS", "ADJOURNMENT"];

const TSV_COLUMNS: usize = 13;
const TSV_HEADER: &str = "volume\tissue\tchamber";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// 13 tab-separated columns, `\t` and `\n` escaped inside fields.
    #[default]
    Tsv,
    /// Space-delimited record layout: ten metadata fields, heading, a
    /// `Mr./Ms./Mrs. NAME` speaker token, then the body.
    Raw,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormatConfig {
    pub format: InputFormat,
    pub congress_range: (u32, u32),
    /// Case-insensitive regexes matched against the heading.
    pub exclusions: Vec<String>,
    /// Normalized speaker key -> canonical key, for disambiguation.
    pub speaker_aliases: BTreeMap<String, String>,
    /// Hard failure when malformed rows exceed this fraction.
    pub max_malformed_fraction: f64,
}

impl Default for FormatConfig {
    fn default() -> Self {
        FormatConfig {
            format: InputFormat::Tsv,
            congress_range: (104, 113),
            exclusions: DEFAULT_EXCLUSIONS.iter().map(|s| s.to_string()).collect(),
            speaker_aliases: BTreeMap::new(),
            max_malformed_fraction: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParseReport {
    pub records: Vec<SpeechRecord>,
    pub errors: Vec<RowError>,
    pub excluded_procedural: usize,
    /// Non-blank data rows seen (header excluded).
    pub rows: usize,
}

/// Normalizes a speaker field to the identity key: honorifics dropped,
/// surname uppercased, and an `of <State>` qualifier appended as `:STATE`.
pub fn speaker_key(raw: &str, aliases: &BTreeMap<String, String>) -> String {
    let mut words: Vec<&str> = raw.split_whitespace().collect();
    if let Some(first) = words.first() {
        let f = first.trim_end_matches('.').to_ascii_lowercase();
        if matches!(f.as_str(), "mr" | "ms" | "mrs" | "miss" | "madam" | "senator") {
            words.remove(0);
        }
    }
    let key = match words.iter().position(|w| w.eq_ignore_ascii_case("of")) {
        Some(i) if i > 0 && i + 1 < words.len() => format!(
            "{}:{}",
            words[..i].join(" ").to_uppercase(),
            words[i + 1..].join(" ").to_uppercase()
        ),
        _ => words.join(" ").to_uppercase(),
    };
    let key = key.trim_end_matches(['.', ',']).to_string();
    aliases.get(&key).cloned().unwrap_or(key)
}

fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn parse_month(s: &str) -> Option<u32> {
    if let Ok(n) = s.parse::<u32>() {
        return (1..=12).contains(&n).then_some(n);
    }
    const MONTHS: [&str; 12] = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ];
    let lower = s.to_ascii_lowercase();
    MONTHS
        .iter()
        .position(|m| lower.starts_with(m))
        .map(|i| i as u32 + 1)
}

fn num<T: std::str::FromStr>(name: &str, s: &str) -> std::result::Result<T, String> {
    s.trim()
        .parse::<T>()
        .map_err(|_| format!("{name}: expected a number, got {s:?}"))
}

struct Meta<'a> {
    volume: &'a str,
    issue: &'a str,
    chamber: &'a str,
    pages: &'a str,
    congress: &'a str,
    session: &'a str,
    day: &'a str,
    month: &'a str,
    year: &'a str,
}

fn build_record(
    meta: Meta<'_>,
    heading: String,
    speaker: &str,
    text: String,
    config: &FormatConfig,
) -> std::result::Result<SpeechRecord, String> {
    let volume: u32 = num("volume", meta.volume)?;
    let issue: u32 = num("issue", meta.issue)?;
    if volume == 0 || issue == 0 {
        return Err("volume and issue must be positive".into());
    }
    let chamber: Chamber = meta.chamber.parse().map_err(|e: Error| e.to_string())?;
    let congress: u32 = num("congress", meta.congress)?;
    let (lo, hi) = config.congress_range;
    if congress < lo || congress > hi {
        return Err(format!("congress {congress} outside [{lo}, {hi}]"));
    }
    let session: u8 = num("session", meta.session)?;
    if session != 1 && session != 2 {
        return Err(format!("session must be 1 or 2, got {session}"));
    }
    let day: u32 = num("day", meta.day)?;
    let month = parse_month(meta.month.trim()).ok_or_else(|| format!("bad month {:?}", meta.month))?;
    let year: i32 = num("year", meta.year)?;
    let date = NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| format!("invalid date {year}-{month}-{day}"))?;
    let (y0, y1) = congress_years(congress);
    if year != y0 && year != y1 {
        return Err(format!("year {year} not within congress {congress} ({y0}-{y1})"));
    }
    if text.trim().is_empty() {
        return Err("empty speech text".into());
    }
    let speaker = speaker_key(speaker, &config.speaker_aliases);
    if speaker.is_empty() {
        return Err("empty speaker".into());
    }
    Ok(SpeechRecord {
        volume,
        issue,
        chamber,
        pages: meta.pages.to_string(),
        congress,
        session_within_congress: session,
        date,
        heading,
        speaker,
        text,
    })
}

fn parse_tsv_line(line: &str, config: &FormatConfig) -> std::result::Result<SpeechRecord, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != TSV_COLUMNS {
        return Err(format!("expected {TSV_COLUMNS} columns, found {}", fields.len()));
    }
    let meta = Meta {
        volume: fields[0],
        issue: fields[1],
        chamber: fields[2],
        pages: fields[3],
        congress: fields[4],
        session: fields[5],
        day: fields[7],
        month: fields[8],
        year: fields[9],
    };
    build_record(meta, unescape(fields[10]), &unescape(fields[11]), unescape(fields[12]), config)
}

fn is_speaker_title(tok: &str) -> bool {
    matches!(tok, "Mr." | "Ms." | "Mrs." | "Mr" | "Ms" | "Mrs")
}

fn is_upper_name(tok: &str) -> bool {
    let t = tok.trim_end_matches(['.', ',', ':']);
    !t.is_empty()
        && t.chars().any(|c| c.is_alphabetic())
        && t.chars().all(|c| c.is_uppercase() || c == '\'' || c == '-')
}

fn parse_raw_line(line: &str, config: &FormatConfig) -> std::result::Result<SpeechRecord, String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 12 {
        return Err(format!("expected at least 12 fields, found {}", toks.len()));
    }
    let speaker_at = (10..toks.len() - 1)
        .find(|&i| is_speaker_title(toks[i]) && is_upper_name(toks[i + 1]))
        .ok_or_else(|| "no Mr./Ms./Mrs. NAME speaker token".to_string())?;
    let meta = Meta {
        volume: toks[0],
        issue: toks[1],
        chamber: toks[2],
        pages: toks[3],
        congress: toks[4],
        session: toks[5],
        day: toks[7],
        month: toks[8],
        year: toks[9],
    };
    let heading = toks[10..speaker_at].join(" ");
    let name = toks[speaker_at + 1].trim_end_matches(['.', ',', ':']);
    let body = toks[speaker_at + 2..].join(" ");
    build_record(meta, heading, name, body, config)
}

fn compile_exclusions(patterns: &[String]) -> Result<Vec<Regex>> {
    patterns
        .iter()
        .map(|p| {
            RegexBuilder::new(p)
                .case_insensitive(true)
                .build()
                .map_err(|e| Error::Config(format!("exclusion pattern {p:?}: {e}")))
        })
        .collect()
}

/// Parses a speech stream, one record per non-blank line.
///
/// Malformed rows are skipped and reported with their 1-based line number;
/// if more than `max_malformed_fraction` of the rows are malformed the whole
/// parse fails. Rows whose heading matches an exclusion pattern are dropped
/// and counted.
pub fn parse_speeches<R: BufRead>(stream: R, config: &FormatConfig) -> Result<ParseReport> {
    let exclusions = compile_exclusions(&config.exclusions)?;
    let mut report = ParseReport::default();
    for (idx, line) in stream.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if config.format == InputFormat::Tsv && report.rows == 0 && line.starts_with(TSV_HEADER) {
            continue;
        }
        report.rows += 1;
        let parsed = match config.format {
            InputFormat::Tsv => parse_tsv_line(line, config),
            InputFormat::Raw => parse_raw_line(line, config),
        };
        match parsed {
            Ok(rec) => {
                if exclusions.iter().any(|re| re.is_match(&rec.heading)) {
                    report.excluded_procedural += 1;
                } else {
                    report.records.push(rec);
                }
            }
            Err(message) => report.errors.push(RowError {
                line: lineno,
                message,
            }),
        }
    }
    if report.rows > 0
        && report.errors.len() as f64 > config.max_malformed_fraction * report.rows as f64
    {
        return Err(Error::TooManyMalformed {
            malformed: report.errors.len(),
            total: report.rows,
            first_line: report.errors[0].line,
        });
    }
    Ok(report)
}

/// Escapes a field for the TSV layout.
#[cfg(test)]
fn escape_field(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}
