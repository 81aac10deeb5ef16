//! Parallel-corpus ingestion: load, quality-filter, deduplicate, and
//! summarize sentence-pair files.
//!
//! Three input layouts are supported:
//!
//! * `wikimatrix_tsv` — three tab-separated columns `score\tsource\ttarget`
//!   (margin score first, as in mined-corpus releases);
//! * `tab_pair` — two tab-separated columns `source\ttarget`;
//! * `moses_two_file` — two aligned plain-text files; the manifest
//!   `file_path` is a prefix, the loader reads `<prefix>.<source_lang>` and
//!   `<prefix>.<target_lang>`.
//!
//! Loading is streaming: malformed lines are counted and skipped, and only
//! the dedup key set grows with corpus size.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Lang, LangError};

/// Margin-score threshold applied when a format carries a quality column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QualityFilter {
    /// Use the built-in default threshold ([`DEFAULT_MIN_QUALITY`]).
    Default,
    /// Keep every well-formed pair.
    Off,
    /// Drop pairs with score below the given value.
    MinScore(f64),
}

/// Default margin-score threshold for mined corpora.
pub const DEFAULT_MIN_QUALITY: f64 = 1.04;

impl QualityFilter {
    fn threshold(&self) -> Option<f64> {
        match self {
            QualityFilter::Default => Some(DEFAULT_MIN_QUALITY),
            QualityFilter::Off => None,
            QualityFilter::MinScore(t) => Some(*t),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {malformed} of {total} lines malformed, input looks corrupt")]
    CorruptInput {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("invalid sentence pair: {0}")]
    InvalidPair(String),
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// One aligned sentence pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub source_text: String,
    pub target_text: String,
    pub source_lang: Lang,
    pub target_lang: Lang,
    /// Margin score from mined corpora, when the format carries one.
    pub quality_score: Option<f64>,
}

impl SentencePair {
    pub fn new(
        source_text: &str,
        target_text: &str,
        source_lang: Lang,
        target_lang: Lang,
        quality_score: Option<f64>,
    ) -> Result<Self, CorpusError> {
        if source_text.trim().is_empty() || target_text.trim().is_empty() {
            return Err(CorpusError::InvalidPair(
                "source and target text must be non-empty after trimming".into(),
            ));
        }
        if source_lang == target_lang {
            return Err(CorpusError::InvalidPair(format!(
                "source and target language are both `{source_lang}`"
            )));
        }
        Ok(SentencePair {
            source_text: source_text.to_string(),
            target_text: target_text.to_string(),
            source_lang,
            target_lang,
            quality_score,
        })
    }

    /// Dedup key: both sides trimmed with internal whitespace collapsed.
    /// No case folding, so case-sensitive scripts survive intact.
    pub fn dedup_key(&self) -> (String, String) {
        (normalize_ws(&self.source_text), normalize_ws(&self.target_text))
    }
}

/// Trim and collapse runs of whitespace to single spaces.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    WikimatrixTsv,
    TabPair,
    MosesTwoFile,
}

/// One corpus file (or moses file pair) in a manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub corpus_name: String,
    pub file_path: String,
    pub format: CorpusFormat,
    pub source_lang: Lang,
    pub target_lang: Lang,
    /// Advisory declared pair count (for declared-mode stats and
    /// declaration checks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_count: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory that relative `file_path` values resolve against.
    /// Set to the manifest file's directory by [`CorpusManifest::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: &Path) -> Result<Self, CorpusError> {
        let m = CorpusManifest {
            entries,
            base_dir: base_dir.to_path_buf(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut m: CorpusManifest = serde_json::from_str(&text)
            .map_err(|e| CorpusError::Manifest(format!("{}: {e}", path.display())))?;
        m.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut keys = HashSet::new();
        for e in &self.entries {
            if e.corpus_name.trim().is_empty() {
                return Err(CorpusError::Manifest("corpus_name must be non-empty".into()));
            }
            if e.source_lang == e.target_lang {
                return Err(CorpusError::Manifest(format!(
                    "{}: source and target language are both `{}`",
                    e.corpus_name, e.source_lang
                )));
            }
            let key = (e.corpus_name.clone(), e.source_lang.clone(), e.target_lang.clone());
            if !keys.insert(key) {
                return Err(CorpusError::Manifest(format!(
                    "duplicate manifest entry ({}, {}, {})",
                    e.corpus_name, e.source_lang, e.target_lang
                )));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, file_path: &str) -> PathBuf {
        let p = Path::new(file_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Running counters for one reader.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ReadStats {
    pub lines: usize,
    pub yielded: usize,
    pub malformed: usize,
    pub quality_dropped: usize,
}

enum LineSource {
    Single(Lines<BufReader<File>>),
    Aligned(Lines<BufReader<File>>, Lines<BufReader<File>>),
}

/// Streaming reader over one manifest entry.
///
/// Yields pairs in file order. Malformed lines are skipped and counted; if
/// more than half of all lines turn out malformed, the stream ends with a
/// [`CorpusError::CorruptInput`].
pub struct PairReader {
    source: LineSource,
    format: CorpusFormat,
    source_lang: Lang,
    target_lang: Lang,
    min_quality: Option<f64>,
    path: PathBuf,
    stats: ReadStats,
    done: bool,
}

impl PairReader {
    pub fn stats(&self) -> ReadStats {
        self.stats
    }

    fn parse_line(&self, line: &str) -> Option<SentencePair> {
        let cols: Vec<&str> = line.split('\t').collect();
        let (score, src, tgt) = match self.format {
            CorpusFormat::WikimatrixTsv => {
                if cols.len() != 3 {
                    return None;
                }
                let score: f64 = cols[0].trim().parse().ok()?;
                (Some(score), cols[1], cols[2])
            }
            CorpusFormat::TabPair => {
                if cols.len() != 2 {
                    return None;
                }
                (None, cols[0], cols[1])
            }
            CorpusFormat::MosesTwoFile => unreachable!("aligned source handled separately"),
        };
        SentencePair::new(src, tgt, self.source_lang.clone(), self.target_lang.clone(), score).ok()
    }

    fn next_raw(&mut self) -> Option<std::io::Result<Option<SentencePair>>> {
        match &mut self.source {
            LineSource::Single(lines) => {
                let line = match lines.next()? {
                    Ok(l) => l,
                    Err(e) => return Some(Err(e)),
                };
                self.stats.lines += 1;
                Some(Ok(self.parse_line(&line)))
            }
            LineSource::Aligned(src, tgt) => match (src.next(), tgt.next()) {
                (None, None) => None,
                // A line without a counterpart in the other file is malformed.
                (Some(Ok(_)), None) | (None, Some(Ok(_))) => {
                    self.stats.lines += 1;
                    Some(Ok(None))
                }
                (Some(Err(e)), _) | (_, Some(Err(e))) => Some(Err(e)),
                (Some(Ok(s)), Some(Ok(t))) => {
                    self.stats.lines += 1;
                    let pair = SentencePair::new(
                        &s,
                        &t,
                        self.source_lang.clone(),
                        self.target_lang.clone(),
                        None,
                    )
                    .ok();
                    Some(Ok(pair))
                }
            },
        }
    }
}

impl Iterator for PairReader {
    type Item = Result<SentencePair, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            match self.next_raw() {
                None => {
                    self.done = true;
                    if 2 * self.stats.malformed > self.stats.lines {
                        return Some(Err(CorpusError::CorruptInput {
                            path: self.path.clone(),
                            malformed: self.stats.malformed,
                            total: self.stats.lines,
                        }));
                    }
                    return None;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(CorpusError::Io {
                        path: self.path.clone(),
                        source: e,
                    }));
                }
                Some(Ok(None)) => {
                    self.stats.malformed += 1;
                }
                Some(Ok(Some(pair))) => {
                    if let (Some(min), Some(score)) = (self.min_quality, pair.quality_score) {
                        if score < min {
                            self.stats.quality_dropped += 1;
                            continue;
                        }
                    }
                    self.stats.yielded += 1;
                    return Some(Ok(pair));
                }
            }
        }
    }
}

fn open_lines(path: &Path) -> Result<Lines<BufReader<File>>, CorpusError> {
    let f = File::open(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufReader::new(f).lines())
}

/// The concrete file(s) a manifest entry reads from.
pub fn entry_files(manifest: &CorpusManifest, entry: &ManifestEntry) -> Vec<PathBuf> {
    let base = manifest.resolve(&entry.file_path);
    match entry.format {
        CorpusFormat::WikimatrixTsv | CorpusFormat::TabPair => vec![base],
        CorpusFormat::MosesTwoFile => {
            let mut src = base.clone().into_os_string();
            src.push(format!(".{}", entry.source_lang));
            let mut tgt = base.into_os_string();
            tgt.push(format!(".{}", entry.target_lang));
            vec![PathBuf::from(src), PathBuf::from(tgt)]
        }
    }
}

/// Open one manifest entry as a streaming pair reader.
pub fn load_corpus(
    manifest: &CorpusManifest,
    entry: &ManifestEntry,
    quality: QualityFilter,
) -> Result<PairReader, CorpusError> {
    let base = manifest.resolve(&entry.file_path);
    let source = match entry.format {
        CorpusFormat::WikimatrixTsv | CorpusFormat::TabPair => LineSource::Single(open_lines(&base)?),
        CorpusFormat::MosesTwoFile => {
            // file_path is a prefix; language codes are appended, never
            // substituted, so dotted prefixes survive
            let files = entry_files(manifest, entry);
            LineSource::Aligned(open_lines(&files[0])?, open_lines(&files[1])?)
        }
    };
    Ok(PairReader {
        source,
        format: entry.format,
        source_lang: entry.source_lang.clone(),
        target_lang: entry.target_lang.clone(),
        min_quality: quality.threshold(),
        path: base,
        stats: ReadStats::default(),
        done: false,
    })
}

/// Iterator adapter keeping the first occurrence of each normalized
/// (source, target) pair. With `enabled = false` it passes everything
/// through and the key set stays empty.
pub struct Dedup<I> {
    inner: I,
    seen: HashSet<(String, String)>,
    enabled: bool,
    removed: usize,
}

impl<I> Dedup<I> {
    pub fn new(inner: I, enabled: bool) -> Self {
        Dedup {
            inner,
            seen: HashSet::new(),
            enabled,
            removed: 0,
        }
    }

    pub fn removed(&self) -> usize {
        self.removed
    }
}

impl<I, E> Iterator for Dedup<I>
where
    I: Iterator<Item = Result<SentencePair, E>>,
{
    type Item = Result<SentencePair, E>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.inner.next()? {
                Err(e) => return Some(Err(e)),
                Ok(pair) => {
                    if !self.enabled || self.seen.insert(pair.dedup_key()) {
                        return Some(Ok(pair));
                    }
                    self.removed += 1;
                }
            }
        }
    }
}

pub fn dedup<I, E>(pairs: I) -> Dedup<I>
where
    I: Iterator<Item = Result<SentencePair, E>>,
{
    Dedup::new(pairs, true)
}

#[derive(Debug, Clone, Copy)]
pub struct StatsOptions {
    pub quality: QualityFilter,
    pub dedup: bool,
    /// Sum declared pair counts instead of reading the files.
    pub declared_only: bool,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            quality: QualityFilter::Default,
            dedup: true,
            declared_only: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsRow {
    pub corpus_name: String,
    pub source_lang: Lang,
    pub target_lang: Lang,
    pub pairs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared: Option<u64>,
    pub malformed: usize,
    pub quality_dropped: usize,
    pub duplicates_removed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub rows: Vec<StatsRow>,
    /// Pair totals per language, summed over every row the language
    /// appears in.
    pub totals: BTreeMap<Lang, u64>,
    pub dedup_enabled: bool,
    pub declared_only: bool,
}

impl CorpusStats {
    /// Tab-separated report: one row per corpus, then per-language totals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "corpus\tpair\tpairs\tdeclared\tmalformed\tquality_dropped\tduplicates_removed\n",
        );
        for r in &self.rows {
            let declared = r
                .declared
                .map(|d| d.to_string())
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "{}\t{}-{}\t{}\t{}\t{}\t{}\t{}\n",
                r.corpus_name,
                r.source_lang,
                r.target_lang,
                r.pairs,
                declared,
                r.malformed,
                r.quality_dropped,
                r.duplicates_removed
            ));
        }
        for (lang, total) in &self.totals {
            out.push_str(&format!("TOTAL\t{lang}\t{total}\t-\t-\t-\t-\n"));
        }
        out
    }
}

/// Count pairs per manifest entry (after filtering and dedup, unless
/// `declared_only`) and accumulate per-language totals.
pub fn corpus_stats(manifest: &CorpusManifest, opts: StatsOptions) -> Result<CorpusStats, CorpusError> {
    let mut rows = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let row = if opts.declared_only {
            let declared = entry.pair_count.ok_or_else(|| {
                CorpusError::Manifest(format!(
                    "{}: declared-only stats need pair_count on every entry",
                    entry.corpus_name
                ))
            })?;
            StatsRow {
                corpus_name: entry.corpus_name.clone(),
                source_lang: entry.source_lang.clone(),
                target_lang: entry.target_lang.clone(),
                pairs: declared,
                declared: Some(declared),
                malformed: 0,
                quality_dropped: 0,
                duplicates_removed: 0,
            }
        } else {
            let reader = load_corpus(manifest, entry, opts.quality)?;
            let mut deduped = Dedup::new(reader, opts.dedup);
            let mut count: u64 = 0;
            for pair in &mut deduped {
                pair?;
                count += 1;
            }
            let removed = deduped.removed();
            let stats = deduped.inner.stats();
            StatsRow {
                corpus_name: entry.corpus_name.clone(),
                source_lang: entry.source_lang.clone(),
                target_lang: entry.target_lang.clone(),
                pairs: count,
                declared: entry.pair_count,
                malformed: stats.malformed,
                quality_dropped: stats.quality_dropped,
                duplicates_removed: removed,
            }
        };
        rows.push(row);
    }

    let mut totals: BTreeMap<Lang, u64> = BTreeMap::new();
    for r in &rows {
        *totals.entry(r.source_lang.clone()).or_default() += r.pairs;
        *totals.entry(r.target_lang.clone()).or_default() += r.pairs;
    }

    Ok(CorpusStats {
        rows,
        totals,
        dedup_enabled: opts.dedup && !opts.declared_only,
        declared_only: opts.declared_only,
    })
}
