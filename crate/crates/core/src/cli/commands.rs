//! The five batch commands. Each reads its inputs, writes its artifacts
//! under the output directory and returns a short summary line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::artifacts::{
    clean_fingerprint, ensure_fresh, read_corpus, read_dtm, write_json, write_text, CorpusArchive,
    CorpusSource, DtmArchive, Fingerprinter, ARTIFACT_VERSION, CORPUS_FILE, DTM_FILE,
};
use super::config::RunConfig;
use crate::classify::{partisan_words, Method, ModelParams, Task};
use crate::corpus::{
    aggregate_sessions, attach_ideology, parse_ideology, parse_overrides, parse_speeches, top_words,
    Party, PartySource, RowSelector,
};
use crate::error::{Error, Result};
use crate::eval::{
    midpoint_classifier_accuracy, run_accuracy_matrix, DiagnosticsReport, EvalData, LeakageTracker,
    MatrixOptions, MidpointRule,
};
use crate::synth::generate;
use crate::textprep::{build_vocabulary, clean_sessions, count_stems, to_doc_term_matrix, vocab_histogram};

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).map_err(|e| Error::io(path, e))?))
}

fn read_join_keys(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut cols = t.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
                map.insert(a.trim().to_string(), b.trim().to_string());
            }
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("{}: expected two tab-separated columns", path.display()),
                })
            }
        }
    }
    Ok(map)
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "{key} = {value}").unwrap();
}

/// Fingerprint of an ingestion run: the settings that shape the corpus plus
/// the contents of every input file.
pub fn ingest_fingerprint(cfg: &RunConfig) -> Result<String> {
    let paths = &cfg.file.paths;
    let mut f = Fingerprinter::new("ingest");
    f.json("format", &cfg.format_config())?;
    f.file("speeches", cfg.input(&paths.speeches).as_deref())?;
    f.file("ideology", cfg.input(&paths.ideology).as_deref())?;
    f.file("overrides", cfg.input(&paths.overrides).as_deref())?;
    f.file("join_keys", cfg.input(&paths.join_keys).as_deref())?;
    Ok(f.finish())
}

/// Fingerprint of a synthetic corpus: its generator settings.
pub fn synth_fingerprint(cfg: &RunConfig) -> Result<String> {
    let mut f = Fingerprinter::new("synth");
    f.json("params", &cfg.file.synth)?;
    Ok(f.finish())
}

/// Parses, aggregates and scores the speech file into `corpus.json`.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<String> {
    let paths = &cfg.file.paths;
    let speeches = cfg
        .input(&paths.speeches)
        .ok_or_else(|| Error::Config("paths.speeches is required for ingest".into()))?;
    let parsed = parse_speeches(open(&speeches)?, &cfg.format_config())?;
    if parsed.rows == 0 {
        log::warn!("{} holds no speech rows; the corpus will be empty", speeches.display());
    }
    for e in &parsed.errors {
        log::warn!("{} line {}: {}", speeches.display(), e.line, e.message);
    }

    let join_keys = match cfg.input(&paths.join_keys) {
        Some(p) => read_join_keys(&p)?,
        None => BTreeMap::new(),
    };
    let (ideology_rows, ideology_report) = match cfg.input(&paths.ideology) {
        Some(p) => {
            let (rows, rep) = parse_ideology(open(&p)?)?;
            (Some(rows), Some(rep))
        }
        None => {
            log::warn!("no ideology file configured: parties come from overrides only and no scores are attached");
            (None, None)
        }
    };
    let overrides = match cfg.input(&paths.overrides) {
        Some(p) => parse_overrides(open(&p)?)?,
        None => Vec::new(),
    };
    let party_source = ideology_rows
        .as_deref()
        .map(|rows| PartySource::from_ideology(rows, &join_keys))
        .unwrap_or_default();
    let (mut sessions, agg) = aggregate_sessions(&parsed.records, &overrides, &party_source);
    let attach = ideology_rows
        .as_deref()
        .map(|rows| attach_ideology(&mut sessions, rows, &join_keys));
    for w in attach.iter().flat_map(|a| &a.warnings) {
        log::warn!("{w}");
    }

    let archive = CorpusArchive {
        format_version: ARTIFACT_VERSION,
        fingerprint: ingest_fingerprint(cfg)?,
        source: CorpusSource::Ingest,
        sessions,
    };
    write_json(&cfg.out_dir.join(CORPUS_FILE), &archive)?;

    let count = |p: Party| archive.sessions.iter().filter(|s| s.party == p).count();
    let mut report = String::new();
    kv(&mut report, "fingerprint", &archive.fingerprint);
    kv(&mut report, "rows_read", parsed.rows);
    kv(&mut report, "records_kept", parsed.records.len());
    kv(&mut report, "malformed_rows", parsed.errors.len());
    kv(&mut report, "dropped_procedural", parsed.excluded_procedural);
    kv(&mut report, "senator_sessions", archive.sessions.len());
    kv(&mut report, "democrat_sessions", count(Party::Democrat));
    kv(&mut report, "republican_sessions", count(Party::Republican));
    kv(&mut report, "other_sessions", count(Party::Other));
    kv(&mut report, "party_conflicts", agg.conflicts.len());
    kv(&mut report, "party_unresolved", agg.unresolved.len());
    match &attach {
        Some(a) => {
            kv(&mut report, "ideology_matched", a.matched);
            kv(&mut report, "ideology_unmatched", a.unmatched.len());
        }
        None => {
            kv(&mut report, "ideology_matched", "NA");
            kv(&mut report, "ideology_unmatched", "NA");
        }
    }
    if let Some(r) = &ideology_report {
        kv(&mut report, "ideology_rows_rejected", r.rejected_rows);
    }
    write_text(&cfg.out_dir.join("ingest_report.txt"), &report)?;
    Ok(format!(
        "ingested {} senator-sessions into {}",
        archive.sessions.len(),
        cfg.out_dir.join(CORPUS_FILE).display()
    ))
}

/// Generates a planted-signal corpus into `corpus.json` plus its ground
/// truth in `manifest.json`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<String> {
    let corpus = generate(&cfg.file.synth)?;
    let archive = CorpusArchive {
        format_version: ARTIFACT_VERSION,
        fingerprint: synth_fingerprint(cfg)?,
        source: CorpusSource::Synth,
        sessions: corpus.sessions,
    };
    write_json(&cfg.out_dir.join(CORPUS_FILE), &archive)?;
    write_json(&cfg.out_dir.join("manifest.json"), &corpus.manifest)?;
    Ok(format!(
        "generated {} senator-sessions into {}",
        archive.sessions.len(),
        cfg.out_dir.join(CORPUS_FILE).display()
    ))
}

/// Cleans the corpus and writes the vocabulary, count matrix and the
/// frequency histogram.
pub fn cmd_clean(cfg: &RunConfig) -> Result<String> {
    let corpus_path = cfg.out_dir.join(CORPUS_FILE);
    let corpus = read_corpus(&corpus_path)?;
    let mut sessions = corpus.sessions;
    clean_sessions(&mut sessions, &cfg.clean);
    let counts = count_stems(sessions.iter().map(|s| s.token_stems.as_slice()));
    let histogram = vocab_histogram(counts.values().copied(), &cfg.file.histogram_thresholds);
    let vocab = build_vocabulary(&counts, &cfg.clean);
    let (dtm, dtm_report) = to_doc_term_matrix(&sessions, &vocab);
    for k in &dtm_report.empty_rows {
        log::warn!("{k} has no in-vocabulary tokens");
    }

    let archive = DtmArchive {
        format_version: ARTIFACT_VERSION,
        fingerprint: clean_fingerprint(&corpus.fingerprint, &cfg.clean)?,
        corpus_fingerprint: corpus.fingerprint,
        dtm,
    };
    write_json(&cfg.out_dir.join(DTM_FILE), &archive)?;
    write_text(&cfg.out_dir.join("vocab.tsv"), &archive.dtm.vocab.to_tsv())?;
    write_text(&cfg.out_dir.join("histogram.tsv"), &histogram.to_tsv())?;

    let mut report = String::new();
    kv(&mut report, "fingerprint", &archive.fingerprint);
    kv(&mut report, "corpus_fingerprint", &archive.corpus_fingerprint);
    kv(&mut report, "stemmer", format!("{:?}", cfg.clean.stemmer));
    kv(&mut report, "unique_stems", histogram.unique_stems);
    for (t, n) in &histogram.thresholds {
        kv(&mut report, &format!("stems_above_{t}"), n);
    }
    kv(&mut report, "vocabulary_size", vocab.len());
    kv(&mut report, "vocab_fingerprint", format!("{:016x}", vocab.fingerprint()));
    kv(&mut report, "rows", archive.dtm.n_rows());
    kv(&mut report, "nonzeros", archive.dtm.nnz());
    kv(&mut report, "empty_rows", dtm_report.empty_rows.len());
    write_text(&cfg.out_dir.join("clean_report.txt"), &report)?;
    Ok(format!("vocabulary of {} stems over {} rows", vocab.len(), archive.dtm.n_rows()))
}

/// Loads the count matrix, refusing it when it was built from a different
/// corpus or cleaning configuration than the current one.
pub fn load_fresh_dtm(cfg: &RunConfig) -> Result<DtmArchive> {
    let corpus_path = cfg.out_dir.join(CORPUS_FILE);
    let dtm_path = cfg.out_dir.join(DTM_FILE);
    let corpus = read_corpus(&corpus_path)?;
    let dtm = read_dtm(&dtm_path)?;
    ensure_fresh(&dtm_path, &dtm.corpus_fingerprint, &corpus.fingerprint)?;
    ensure_fresh(&dtm_path, &dtm.fingerprint, &clean_fingerprint(&corpus.fingerprint, &cfg.clean)?)?;
    if corpus.source == CorpusSource::Ingest && cfg.file.paths.speeches.is_some() {
        ensure_fresh(&corpus_path, &corpus.fingerprint, &ingest_fingerprint(cfg)?)?;
    }
    Ok(dtm)
}

type Pairs = Vec<(Method, Task)>;

/// The requested (method, task) pairs to run, and those skipped. Naive Bayes
/// on the score task is skipped when other pairs remain and refused when it
/// is all that was asked.
pub fn requested_pairs(cfg: &RunConfig) -> Result<(Pairs, Pairs)> {
    let mut run = Vec::new();
    let mut skipped = Vec::new();
    for &t in &cfg.file.tasks {
        for &m in &cfg.file.methods {
            if m.supports(t) {
                run.push((m, t));
            } else {
                skipped.push((m, t));
            }
        }
    }
    if run.is_empty() {
        if skipped.is_empty() {
            return Err(Error::Config("no methods or tasks requested".into()));
        }
        return Err(Error::Excluded(
            "naive Bayes has no ideology-score analogue, so nb/dwn1 is not produced".into(),
        ));
    }
    for (m, t) in &skipped {
        log::warn!("skipping {m}/{t}: combination excluded (naive Bayes has no ideology-score analogue)");
    }
    Ok((run, skipped))
}

/// Builds one accuracy grid per requested (method, task) and the
/// diagnostics over them.
pub fn cmd_matrix(cfg: &RunConfig) -> Result<String> {
    let (pairs, skipped) = requested_pairs(cfg)?;
    let archive = load_fresh_dtm(cfg)?;
    let dtm = &archive.dtm;
    let data = EvalData::from_dtm(dtm, cfg.clean.per_thousand);
    if pairs.iter().any(|&(_, t)| t == Task::Dwn1) && data.dwn1.iter().all(Option::is_none) {
        return Err(Error::Data(
            "the dwn1 task needs ideology scores; configure paths.ideology and rerun ingest".into(),
        ));
    }
    let present: std::collections::BTreeSet<u32> = data.congress.iter().copied().collect();
    let (sessions, missing): (Vec<u32>, Vec<u32>) = cfg.sessions().into_iter().partition(|s| present.contains(s));
    if !missing.is_empty() {
        log::warn!("sessions {missing:?} are in session_range but absent from the data; leaving them out of the grid");
    }
    if sessions.is_empty() {
        return Err(Error::Data("no session in session_range is present in the data".into()));
    }
    let options = MatrixOptions {
        sessions,
        folds: cfg.file.folds,
        seed: cfg.file.seed,
        threads: cfg.file.threads,
    };
    let tracker = LeakageTracker::default();
    let mut diag = DiagnosticsReport::default();
    diag.push("fingerprint", &archive.fingerprint);
    diag.push("seed", cfg.file.seed);
    diag.push("folds", cfg.file.folds);
    diag.push("backwards_scope", format!("{:?}", cfg.file.backwards_scope));
    for (m, t) in &skipped {
        diag.push(format!("{m}.{t}.status"), "excluded");
    }
    let mut nonconvergence = Vec::new();
    let mut written = 0;
    for &(method, task) in &pairs {
        log::info!("building {method}/{task}");
        let run = run_accuracy_matrix(method, task, &data, &cfg.hyperparams, &options, Some(&tracker))?;
        write_text(&cfg.out_dir.join(format!("matrix_{method}_{task}.tsv")), &run.matrix.to_tsv())?;
        written += 1;
        diag.push(format!("{method}.{task}.status"), "ok");
        diag.add_matrix(&run.matrix, cfg.file.backwards_scope);
        diag.push(format!("{method}.{task}.failed_rows"), run.row_failures.len());
        diag.push(format!("{method}.{task}.unconverged_fits"), run.unconverged_fits);
        for (label, why) in &run.row_failures {
            diag.push(format!("{method}.{task}.failure.{label}"), why);
        }
        if run.nonconvergence {
            nonconvergence.push(format!("{method}/{task}"));
        }
        if method == Method::Lasso {
            if let Some(model) = run.pooled_models.as_ref().and_then(|m| m.first()) {
                write_text(&cfg.out_dir.join(format!("model_lasso_{task}.json")), &(model.to_json()? + "\n"))?;
                if let (Task::Party, ModelParams::Lasso(l)) = (task, &model.params) {
                    let words = partisan_words(l, &dtm.vocab, cfg.file.partisan_k)?;
                    let mut tsv = String::from("rank\tstem\tcoefficient\tleans\n");
                    for (i, (stem, b)) in words.iter().enumerate() {
                        let leans = if *b > 0.0 { "R" } else { "D" };
                        writeln!(tsv, "{}\t{stem}\t{b:.6}\t{leans}", i + 1).unwrap();
                    }
                    write_text(&cfg.out_dir.join("partisan_words.tsv"), &tsv)?;
                    diag.push("lasso.party.partisan_words", words.len());
                }
            }
        }
    }
    diag.push("leakage.scored", tracker.scored());
    diag.push("leakage.violations", tracker.violations());
    write_text(&cfg.out_dir.join("diagnostics.txt"), &diag.to_text())?;
    if tracker.violations() > 0 {
        return Err(Error::Training(format!(
            "{} within-sample items were scored by a model trained on them",
            tracker.violations()
        )));
    }
    if !nonconvergence.is_empty() {
        return Err(Error::NonConvergence(format!(
            "training rows failed to converge in {}",
            nonconvergence.join(", ")
        )));
    }
    Ok(format!("wrote {written} matrices to {}", cfg.out_dir.display()))
}

/// Top-word tables and the ideology midpoint baselines.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let archive = load_fresh_dtm(cfg)?;
    let dtm = &archive.dtm;
    let k = cfg.file.top_k;

    let mut selectors = vec![
        ("All".to_string(), RowSelector::All),
        ("D".to_string(), RowSelector::Party(Party::Democrat)),
        ("R".to_string(), RowSelector::Party(Party::Republican)),
    ];
    let mut congresses: Vec<u32> = dtm.rows.iter().map(|r| r.key.congress).collect();
    congresses.sort_unstable();
    congresses.dedup();
    selectors.extend(congresses.iter().map(|&c| (c.to_string(), RowSelector::Congress(c))));
    let mut tsv = String::from("selection\trank\tstem\tcount\n");
    for (name, sel) in &selectors {
        for (i, (stem, c)) in top_words(dtm, *sel, k).iter().enumerate() {
            writeln!(tsv, "{name}\t{}\t{stem}\t{c}", i + 1).unwrap();
        }
    }
    write_text(&cfg.out_dir.join("top_words.tsv"), &tsv)?;

    let parties: Vec<Party> = dtm.rows.iter().map(|r| r.party).collect();
    let mut report = String::new();
    kv(&mut report, "fingerprint", &archive.fingerprint);
    kv(&mut report, "rows", dtm.n_rows());
    kv(&mut report, "vocabulary_size", dtm.n_cols());
    for p in [Party::Democrat, Party::Republican, Party::Other] {
        kv(&mut report, &format!("sessions.{}", p.code()), parties.iter().filter(|&&q| q == p).count());
    }
    for c in &congresses {
        kv(&mut report, &format!("sessions.{c}"), dtm.rows.iter().filter(|r| r.key.congress == *c).count());
    }
    let dims: [(&str, Vec<Option<f64>>); 2] = [
        ("dwn1", dtm.rows.iter().map(|r| r.dwn1).collect()),
        ("dwn2", dtm.rows.iter().map(|r| r.dwn2).collect()),
    ];
    for (name, scores) in &dims {
        for (rule_name, rule) in [("party_means", MidpointRule::PartyMeans), ("zero", MidpointRule::Fixed(0.0))] {
            let value = match midpoint_classifier_accuracy(scores, &parties, rule) {
                Ok(a) => format!("{a:.4}"),
                Err(_) => "NA".into(),
            };
            kv(&mut report, &format!("midpoint.{name}.{rule_name}"), value);
        }
    }
    write_text(&cfg.out_dir.join("report.txt"), &report)?;
    Ok(format!("report written to {}", cfg.out_dir.display()))
}

