//! Instruction-tuning dataset construction.
//!
//! Two record families are assembled and mixed:
//!
//! * translation-task records sampled from parallel corpora, with the
//!   instruction rendered from the shipped translation template and the
//!   direction controlling which side becomes the output;
//! * general-task records from an English seed file plus row-aligned
//!   translated versions.
//!
//! Every builder is deterministic given its inputs and seed; see
//! [`crate::det`] for the sampling contract. The trainer-facing output is
//! a single JSON array of `{instruction, input, output}` objects, with
//! per-record metadata in a JSONL sidecar and counts in a provenance
//! report.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CorpusError, CorpusManifest, QualityFilter, SentencePair};
use crate::det;
use crate::lang::{Lang, LangError};

/// Instruction template for translation-task records; placeholders are
/// replaced with English language names.
pub const TRANSLATION_TEMPLATE: &str = include_str!("../templates/task_translation.txt");

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("requested {requested} pairs but only {available} are available")]
    NotEnoughPairs { requested: u64, available: u64 },
    #[error("pair has no {lang} side; cannot orient {direction:?} record")]
    DirectionMismatch { lang: Lang, direction: Direction },
    #[error("{path}: row count {got} does not match the seed's {expected}")]
    Misaligned {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("record {index} in {path}: {message}")]
    InvalidRecord {
        path: PathBuf,
        index: usize,
        message: String,
    },
    #[error("no corpus in the manifest covers language `{0}` paired with English")]
    NoCorpusForLang(Lang),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lang(#[from] LangError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Non-English text on the target (output) side.
    EnToX,
    /// Non-English text on the source (input) side.
    XToEn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    General,
    Translation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub task: Task,
    pub lang: Lang,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

/// One instruction-tuning record: task instruction, optional input, and
/// the desired output. Only the three text fields reach the
/// trainer-facing file; `meta` goes to the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstructionRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
    #[serde(skip)]
    pub meta: RecordMeta,
}

impl InstructionRecord {
    fn validate(&self) -> Result<(), String> {
        if self.instruction.trim().is_empty() {
            return Err("instruction must be non-empty".into());
        }
        if self.output.trim().is_empty() {
            return Err("output must be non-empty".into());
        }
        match (self.meta.task, self.meta.direction) {
            (Task::Translation, None) => Err("translation records carry a direction".into()),
            (Task::General, Some(_)) => Err("general records carry no direction".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub source: String,
    pub count: usize,
}

/// A tagged record collection plus the seed and source counts that
/// produced it.
#[derive(Debug, Clone, Serialize)]
pub struct InstructionDataset {
    pub records: Vec<InstructionRecord>,
    pub seed: u64,
    pub provenance: Vec<ProvenanceEntry>,
}

impl InstructionDataset {
    pub fn total_from_provenance(&self) -> usize {
        self.provenance.iter().map(|p| p.count).sum()
    }
}

/// Render the translation instruction for a language pair.
pub fn translation_instruction(src: &Lang, tgt: &Lang) -> Result<String, BuildError> {
    let line = TRANSLATION_TEMPLATE.trim_end_matches('\n');
    Ok(line
        .replace("<SRC>", src.english_name()?)
        .replace("<TGT>", tgt.english_name()?))
}

fn orient<'a>(pair: &'a SentencePair, direction: Direction) -> Result<(&'a str, &'a str, Lang, Lang), BuildError> {
    let (en_text, x_text, x_lang) = if pair.source_lang.is_english() {
        (&pair.source_text, &pair.target_text, pair.target_lang.clone())
    } else if pair.target_lang.is_english() {
        (&pair.target_text, &pair.source_text, pair.source_lang.clone())
    } else {
        return Err(BuildError::DirectionMismatch {
            lang: pair.source_lang.clone(),
            direction,
        });
    };
    let en = Lang::new("en").expect("static code");
    Ok(match direction {
        Direction::EnToX => (en_text, x_text, en, x_lang),
        Direction::XToEn => (x_text, en_text, x_lang, en),
    })
}

/// Sample `count` pairs without replacement and format them as
/// translation-task records for one direction.
pub fn build_translation_records(
    pairs: &[SentencePair],
    direction: Direction,
    count: u64,
    seed: u64,
) -> Result<Vec<InstructionRecord>, BuildError> {
    if count > pairs.len() as u64 {
        return Err(BuildError::NotEnoughPairs {
            requested: count,
            available: pairs.len() as u64,
        });
    }
    let mut rng = det::rng_from_seed(seed);
    let picked = det::sample_indices(pairs.len(), count as usize, &mut rng);
    let mut records = Vec::with_capacity(picked.len());
    for idx in picked {
        records.push(record_for_pair(&pairs[idx], direction)?);
    }
    Ok(records)
}

fn record_for_pair(pair: &SentencePair, direction: Direction) -> Result<InstructionRecord, BuildError> {
    let (input, output, src_lang, tgt_lang) = orient(pair, direction)?;
    let non_en = if src_lang.is_english() { tgt_lang.clone() } else { src_lang.clone() };
    let record = InstructionRecord {
        instruction: translation_instruction(&src_lang, &tgt_lang)?,
        input: input.to_string(),
        output: output.to_string(),
        meta: RecordMeta {
            task: Task::Translation,
            lang: non_en,
            direction: Some(direction),
        },
    };
    record
        .validate()
        .map_err(|m| BuildError::InvalidRecord {
            path: PathBuf::new(),
            index: 0,
            message: m,
        })?;
    Ok(record)
}

#[derive(Debug, Deserialize)]
struct RawGeneralRecord {
    instruction: String,
    #[serde(default)]
    input: String,
    output: String,
}

/// Parse a general-task instruction file: a JSON array of
/// `{instruction, input, output}` objects.
fn load_general_file(path: &Path) -> Result<Vec<RawGeneralRecord>, BuildError> {
    let text = std::fs::read_to_string(path).map_err(|e| BuildError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let rows: Vec<RawGeneralRecord> = serde_json::from_str(&text).map_err(|e| BuildError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for (i, r) in rows.iter().enumerate() {
        if r.instruction.trim().is_empty() || r.output.trim().is_empty() {
            return Err(BuildError::InvalidRecord {
                path: path.to_path_buf(),
                index: i,
                message: "instruction and output must be non-empty".into(),
            });
        }
    }
    Ok(rows)
}

fn general_records(rows: Vec<RawGeneralRecord>, lang: &Lang) -> Vec<InstructionRecord> {
    rows.into_iter()
        .map(|r| InstructionRecord {
            instruction: r.instruction,
            input: r.input,
            output: r.output,
            meta: RecordMeta {
                task: Task::General,
                lang: lang.clone(),
                direction: None,
            },
        })
        .collect()
}

/// English seed records plus one record per language per row from the
/// row-aligned translated files.
pub fn build_general_records(
    seed_file: &Path,
    translated_files: &BTreeMap<Lang, PathBuf>,
) -> Result<Vec<InstructionRecord>, BuildError> {
    let seed_rows = load_general_file(seed_file)?;
    let expected = seed_rows.len();
    let en = Lang::new("en").expect("static code");
    let mut records = general_records(seed_rows, &en);
    for (lang, path) in translated_files {
        let rows = load_general_file(path)?;
        if rows.len() != expected {
            return Err(BuildError::Misaligned {
                path: path.clone(),
                expected,
                got: rows.len(),
            });
        }
        records.extend(general_records(rows, lang));
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeDirection {
    EnToX,
    XToEn,
    /// Half of the amount in each direction; an odd remainder goes to
    /// `en_to_x`.
    BothSplit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralSource {
    pub lang: Lang,
    pub file_path: String,
}

/// Declarative description of one dataset build.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixRecipe {
    pub general_sources: Vec<GeneralSource>,
    pub translation_amounts: BTreeMap<Lang, u64>,
    pub directions: BTreeMap<Lang, RecipeDirection>,
    pub seed: u64,
}

impl MixRecipe {
    pub fn load(path: &Path) -> Result<Self, BuildError> {
        let text = std::fs::read_to_string(path).map_err(|e| BuildError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| BuildError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn direction_for(&self, lang: &Lang) -> RecipeDirection {
        self.directions.get(lang).copied().unwrap_or(RecipeDirection::EnToX)
    }
}

/// Options forwarded to corpus loading during a mix.
#[derive(Debug, Clone, Copy)]
pub struct MixOptions {
    pub quality: QualityFilter,
    pub dedup: bool,
}

impl Default for MixOptions {
    fn default() -> Self {
        MixOptions {
            quality: QualityFilter::Default,
            dedup: true,
        }
    }
}

/// Deduped pairs for one language from every manifest entry pairing it
/// with English, in manifest order.
fn language_pool(
    manifest: &CorpusManifest,
    lang: &Lang,
    opts: MixOptions,
) -> Result<Vec<SentencePair>, BuildError> {
    let relevant: Vec<_> = manifest
        .entries
        .iter()
        .filter(|e| {
            (e.source_lang.is_english() && &e.target_lang == lang)
                || (e.target_lang.is_english() && &e.source_lang == lang)
        })
        .collect();
    if relevant.is_empty() {
        return Err(BuildError::NoCorpusForLang(lang.clone()));
    }
    let mut pool = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for entry in relevant {
        let reader = corpus::load_corpus(manifest, entry, opts.quality)?;
        for pair in reader {
            let pair = pair?;
            if !opts.dedup || seen.insert(pair.dedup_key()) {
                pool.push(pair);
            }
        }
    }
    Ok(pool)
}

fn provenance_label(lang: &Lang, direction: Direction) -> String {
    match direction {
        Direction::EnToX => format!("translation-en-{lang}"),
        Direction::XToEn => format!("translation-{lang}-en"),
    }
}

/// Build the full dataset a recipe describes: general records, sampled
/// translation records per language, one global shuffle.
///
/// Byte-identical output for identical inputs and seed. Per-language
/// sampling streams are seeded with `derive_seed(recipe.seed, label)`
/// where the label is the provenance label of the stream.
pub fn mix(
    recipe: &MixRecipe,
    manifest: &CorpusManifest,
    base_dir: &Path,
    opts: MixOptions,
) -> Result<InstructionDataset, BuildError> {
    let mut records: Vec<InstructionRecord> = Vec::new();
    let mut provenance: Vec<ProvenanceEntry> = Vec::new();

    // general-task sources, in recipe order; alignment is enforced
    // against the English seed when one is present
    let en = Lang::new("en").expect("static code");
    let resolve = |p: &str| -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            base_dir.join(path)
        }
    };
    let seed_rows: Option<usize> = {
        let mut n = None;
        for s in &recipe.general_sources {
            if s.lang == en {
                n = Some(load_general_file(&resolve(&s.file_path))?.len());
            }
        }
        n
    };
    for source in &recipe.general_sources {
        let path = resolve(&source.file_path);
        let rows = load_general_file(&path)?;
        if let Some(expected) = seed_rows {
            if rows.len() != expected {
                return Err(BuildError::Misaligned {
                    path,
                    expected,
                    got: rows.len(),
                });
            }
        }
        let recs = general_records(rows, &source.lang);
        provenance.push(ProvenanceEntry {
            source: format!("general-{}", source.lang),
            count: recs.len(),
        });
        records.extend(recs);
    }

    // translation-task records per language, languages in sorted order
    for (lang, &amount) in &recipe.translation_amounts {
        if amount == 0 {
            continue;
        }
        let pool = language_pool(manifest, lang, opts)?;
        if amount > pool.len() as u64 {
            return Err(BuildError::NotEnoughPairs {
                requested: amount,
                available: pool.len() as u64,
            });
        }
        let splits: Vec<(Direction, u64)> = match recipe.direction_for(lang) {
            RecipeDirection::EnToX => vec![(Direction::EnToX, amount)],
            RecipeDirection::XToEn => vec![(Direction::XToEn, amount)],
            RecipeDirection::BothSplit => vec![
                (Direction::EnToX, amount - amount / 2),
                (Direction::XToEn, amount / 2),
            ],
        };
        // one sample for the whole amount so no pair repeats across the
        // direction split
        let label = format!("sample-{lang}");
        let mut rng = det::rng_from_seed(det::derive_seed(recipe.seed, &label));
        let picked = det::sample_indices(pool.len(), amount as usize, &mut rng);
        let mut cursor = 0usize;
        for (direction, count) in splits {
            if count == 0 {
                continue;
            }
            let mut recs = Vec::with_capacity(count as usize);
            for &idx in &picked[cursor..cursor + count as usize] {
                recs.push(record_for_pair(&pool[idx], direction)?);
            }
            cursor += count as usize;
            provenance.push(ProvenanceEntry {
                source: provenance_label(lang, direction),
                count: recs.len(),
            });
            records.extend(recs);
        }
    }

    let mut rng = det::rng_from_seed(det::derive_seed(recipe.seed, "global-shuffle"));
    det::shuffle(&mut records, &mut rng);

    let dataset = InstructionDataset {
        records,
        seed: recipe.seed,
        provenance,
    };
    debug_assert_eq!(dataset.total_from_provenance(), dataset.records.len());
    Ok(dataset)
}

/// Serialized dataset layout: trainer-facing array, metadata sidecar, and
/// provenance report.
pub struct DatasetFiles {
    pub data_json: String,
    pub meta_jsonl: String,
    pub provenance_json: String,
}

pub fn render_dataset(dataset: &InstructionDataset) -> DatasetFiles {
    #[derive(Serialize)]
    struct Visible<'a> {
        instruction: &'a str,
        input: &'a str,
        output: &'a str,
    }
    let visible: Vec<Visible> = dataset
        .records
        .iter()
        .map(|r| Visible {
            instruction: &r.instruction,
            input: &r.input,
            output: &r.output,
        })
        .collect();
    let data_json = serde_json::to_string_pretty(&visible).expect("serializable") + "\n";

    let mut meta_jsonl = String::new();
    for r in &dataset.records {
        meta_jsonl.push_str(&serde_json::to_string(&r.meta).expect("serializable"));
        meta_jsonl.push('\n');
    }

    #[derive(Serialize)]
    struct Provenance<'a> {
        seed: u64,
        prng: &'static str,
        sampler: &'static str,
        seed_derivation: &'static str,
        total_records: usize,
        sources: &'a [ProvenanceEntry],
    }
    let provenance_json = serde_json::to_string_pretty(&Provenance {
        seed: dataset.seed,
        prng: "chacha20/seed_from_u64",
        sampler: "fisher-yates-prefix",
        seed_derivation: "seed xor fnv1a64(label)",
        total_records: dataset.records.len(),
        sources: &dataset.provenance,
    })
    .expect("serializable")
        + "\n";

    DatasetFiles {
        data_json,
        meta_jsonl,
        provenance_json,
    }
}

/// A multi-way evaluation set: the same row rendered in English and every
/// translated language.
#[derive(Debug, Clone, PartialEq)]
pub struct MiEvalSet {
    /// Non-English columns, sorted.
    pub langs: Vec<Lang>,
    /// `texts[0]` is English, followed by `langs` order.
    pub rows: Vec<MiEvalRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiEvalRow {
    pub id: usize,
    pub texts: Vec<String>,
}

/// Assemble a multi-way evaluation set from seed instructions and
/// row-aligned translations.
pub fn build_mi_eval(
    seeds: &[String],
    translations: &BTreeMap<Lang, Vec<String>>,
) -> Result<MiEvalSet, BuildError> {
    for (lang, rows) in translations {
        if rows.len() != seeds.len() {
            return Err(BuildError::Misaligned {
                path: PathBuf::from(format!("<{lang}>")),
                expected: seeds.len(),
                got: rows.len(),
            });
        }
    }
    let langs: Vec<Lang> = translations.keys().cloned().collect();
    let rows = seeds
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let mut texts = vec![seed.clone()];
            for lang in &langs {
                texts.push(translations[lang][i].clone());
            }
            MiEvalRow { id: i, texts }
        })
        .collect();
    Ok(MiEvalSet { langs, rows })
}

fn escape_tsv(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape_tsv(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
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

impl MiEvalSet {
    /// Tab-separated rendering with a header row; cell text is escaped so
    /// the file round-trips exactly.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\ten");
        for lang in &self.langs {
            out.push('\t');
            out.push_str(lang.as_str());
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.id.to_string());
            for text in &row.texts {
                out.push('\t');
                out.push_str(&escape_tsv(text));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, BuildError> {
        let bad = |message: &str| BuildError::Parse {
            path: PathBuf::from("<mi-eval tsv>"),
            message: message.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() < 2 || cols[0] != "id" || cols[1] != "en" {
            return Err(bad("header must start with `id\\ten`"));
        }
        let langs: Vec<Lang> = cols[2..]
            .iter()
            .map(|c| Lang::new(c))
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != cols.len() {
                return Err(bad("row width does not match header"));
            }
            let id: usize = cells[0].parse().map_err(|_| bad("id is not an integer"))?;
            rows.push(MiEvalRow {
                id,
                texts: cells[1..].iter().map(|c| unescape_tsv(c)).collect(),
            });
        }
        Ok(MiEvalSet { langs, rows })
    }

    /// Read one instruction per line.
    pub fn read_lines(path: &Path) -> Result<Vec<String>, BuildError> {
        let file = std::fs::File::open(path).map_err(|e| BuildError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut rows = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            rows.push(line.map_err(|e| BuildError::Io {
                path: path.to_path_buf(),
                source: e,
            })?);
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusFormat, ManifestEntry};

    fn lang(s: &str) -> Lang {
        Lang::new(s).unwrap()
    }

    fn pair(en_text: &str, zh_text: &str) -> SentencePair {
        SentencePair::new(en_text, zh_text, lang("en"), lang("zh"), None).unwrap()
    }

    #[test]
    fn en_to_x_puts_non_english_on_the_output_side() {
        let records = build_translation_records(&[pair("Hello.", "你好。")], Direction::EnToX, 1, 7).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(
            r.instruction,
            "Translate the following sentences from English to Chinese."
        );
        assert_eq!(r.input, "Hello.");
        assert_eq!(r.output, "你好。");
        assert_eq!(r.meta.direction, Some(Direction::EnToX));
        assert_eq!(r.meta.lang, lang("zh"));
    }

    #[test]
    fn x_to_en_swaps_the_roles() {
        let records = build_translation_records(&[pair("Hello.", "你好。")], Direction::XToEn, 1, 7).unwrap();
        let r = &records[0];
        assert_eq!(
            r.instruction,
            "Translate the following sentences from Chinese to English."
        );
        assert_eq!(r.input, "你好。");
        assert_eq!(r.output, "Hello.");
    }

    #[test]
    fn orientation_follows_language_not_column_order() {
        // the pair arrives zh->en; en_to_x must still put Chinese on the
        // output side
        let flipped = SentencePair::new("你好。", "Hello.", lang("zh"), lang("en"), None).unwrap();
        let records = build_translation_records(&[flipped], Direction::EnToX, 1, 7).unwrap();
        assert_eq!(records[0].input, "Hello.");
        assert_eq!(records[0].output, "你好。");
    }

    #[test]
    fn count_zero_is_empty_and_overdraw_errors() {
        let pairs = vec![pair("a", "一。")];
        assert!(build_translation_records(&pairs, Direction::EnToX, 0, 7)
            .unwrap()
            .is_empty());
        assert!(matches!(
            build_translation_records(&pairs, Direction::EnToX, 2, 7),
            Err(BuildError::NotEnoughPairs { requested: 2, available: 1 })
        ));
    }

    #[test]
    fn unknown_language_name_errors() {
        let p = SentencePair::new("x", "y", lang("en"), lang("qq"), None).unwrap();
        assert!(matches!(
            build_translation_records(&[p], Direction::EnToX, 1, 7),
            Err(BuildError::Lang(_))
        ));
    }

    #[test]
    fn sampling_is_without_replacement_and_seeded() {
        let pairs: Vec<SentencePair> = (0..100)
            .map(|i| pair(&format!("sentence {i}"), &format!("句子{i}。")))
            .collect();
        let a = build_translation_records(&pairs, Direction::EnToX, 40, 11).unwrap();
        let b = build_translation_records(&pairs, Direction::EnToX, 40, 11).unwrap();
        assert_eq!(a, b);
        let outputs: std::collections::HashSet<_> = a.iter().map(|r| r.output.clone()).collect();
        assert_eq!(outputs.len(), 40);
        let c = build_translation_records(&pairs, Direction::EnToX, 40, 12).unwrap();
        assert_ne!(a, c);
    }

    fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    fn general_json(rows: &[(&str, &str, &str)]) -> String {
        let rows: Vec<serde_json::Value> = rows
            .iter()
            .map(|(i, x, o)| serde_json::json!({"instruction": i, "input": x, "output": o}))
            .collect();
        serde_json::to_string(&rows).unwrap()
    }

    #[test]
    fn general_records_emit_seed_plus_translations() {
        let dir = tempfile::tempdir().unwrap();
        let seed = write(
            dir.path(),
            "en.json",
            &general_json(&[("Ask a", "", "Answer a"), ("Ask b", "ctx", "Answer b")]),
        );
        let zh = write(
            dir.path(),
            "zh.json",
            &general_json(&[("问甲", "", "答甲"), ("问乙", "上下文", "答乙")]),
        );
        let mut translated = BTreeMap::new();
        translated.insert(lang("zh"), zh);
        let records = build_general_records(&seed, &translated).unwrap();
        assert_eq!(records.len(), 4);
        assert!(records.iter().all(|r| r.meta.task == Task::General && r.meta.direction.is_none()));
        assert_eq!(records.iter().filter(|r| r.meta.lang == lang("zh")).count(), 2);
    }

    #[test]
    fn english_only_seed_is_allowed() {
        let dir = tempfile::tempdir().unwrap();
        let seed = write(dir.path(), "en.json", &general_json(&[("Ask", "", "Answer")]));
        let records = build_general_records(&seed, &BTreeMap::new()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].meta.lang, lang("en"));
    }

    #[test]
    fn misaligned_translation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let seed = write(
            dir.path(),
            "en.json",
            &general_json(&[("a", "", "b"), ("c", "", "d")]),
        );
        let zh = write(dir.path(), "zh.json", &general_json(&[("甲", "", "乙")]));
        let mut translated = BTreeMap::new();
        translated.insert(lang("zh"), zh);
        assert!(matches!(
            build_general_records(&seed, &translated),
            Err(BuildError::Misaligned { expected: 2, got: 1, .. })
        ));
    }

    fn mix_fixture(dir: &Path) -> (MixRecipe, CorpusManifest) {
        let mut corpus_lines = String::new();
        for i in 0..60 {
            corpus_lines.push_str(&format!("en sent {i}\t中文{i}。\n"));
        }
        write(dir, "en_zh.tsv", &corpus_lines);
        write(
            dir,
            "alpaca_en.json",
            &general_json(&[("Ask a", "", "Answer a"), ("Ask b", "", "Answer b")]),
        );
        write(
            dir,
            "alpaca_zh.json",
            &general_json(&[("问甲", "", "答甲"), ("问乙", "", "答乙")]),
        );
        let manifest = CorpusManifest::new(
            vec![ManifestEntry {
                corpus_name: "fixture".into(),
                file_path: "en_zh.tsv".into(),
                format: CorpusFormat::TabPair,
                source_lang: lang("en"),
                target_lang: lang("zh"),
                pair_count: None,
            }],
            dir,
        )
        .unwrap();
        let recipe = MixRecipe {
            general_sources: vec![
                GeneralSource { lang: lang("en"), file_path: "alpaca_en.json".into() },
                GeneralSource { lang: lang("zh"), file_path: "alpaca_zh.json".into() },
            ],
            translation_amounts: [(lang("zh"), 10)].into_iter().collect(),
            directions: [(lang("zh"), RecipeDirection::EnToX)].into_iter().collect(),
            seed: 99,
        };
        (recipe, manifest)
    }

    #[test]
    fn mix_matches_configured_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let (recipe, manifest) = mix_fixture(dir.path());
        let ds = mix(&recipe, &manifest, dir.path(), MixOptions::default()).unwrap();
        assert_eq!(ds.records.len(), 14);
        assert_eq!(ds.total_from_provenance(), 14);
        let sources: Vec<&str> = ds.provenance.iter().map(|p| p.source.as_str()).collect();
        assert_eq!(sources, vec!["general-en", "general-zh", "translation-en-zh"]);
        assert_eq!(ds.provenance[2].count, 10);
    }

    #[test]
    fn mix_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let (recipe, manifest) = mix_fixture(dir.path());
        let a = render_dataset(&mix(&recipe, &manifest, dir.path(), MixOptions::default()).unwrap());
        let b = render_dataset(&mix(&recipe, &manifest, dir.path(), MixOptions::default()).unwrap());
        assert_eq!(a.data_json, b.data_json);
        assert_eq!(a.meta_jsonl, b.meta_jsonl);
        assert_eq!(a.provenance_json, b.provenance_json);

        let mut reseeded = recipe.clone();
        reseeded.seed = 100;
        let c = render_dataset(&mix(&reseeded, &manifest, dir.path(), MixOptions::default()).unwrap());
        assert_ne!(a.data_json, c.data_json);
    }

    #[test]
    fn zero_amount_leaves_no_provenance_entry() {
        let dir = tempfile::tempdir().unwrap();
        let (mut recipe, manifest) = mix_fixture(dir.path());
        recipe.translation_amounts.insert(lang("zh"), 0);
        let ds = mix(&recipe, &manifest, dir.path(), MixOptions::default()).unwrap();
        assert!(ds.provenance.iter().all(|p| !p.source.starts_with("translation")));
    }

    #[test]
    fn both_split_halves_without_pair_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let (mut recipe, manifest) = mix_fixture(dir.path());
        recipe.translation_amounts.insert(lang("zh"), 9);
        recipe.directions.insert(lang("zh"), RecipeDirection::BothSplit);
        let ds = mix(&recipe, &manifest, dir.path(), MixOptions::default()).unwrap();
        let en_to_x = ds.provenance.iter().find(|p| p.source == "translation-en-zh").unwrap();
        let x_to_en = ds.provenance.iter().find(|p| p.source == "translation-zh-en").unwrap();
        assert_eq!(en_to_x.count, 5); // odd remainder goes to en_to_x
        assert_eq!(x_to_en.count, 4);
        // a pair sampled once never repeats: the Chinese side appears in
        // exactly one record, whichever direction it went to
        let mut zh_sides = Vec::new();
        for r in ds.records.iter().filter(|r| r.meta.task == Task::Translation) {
            let zh_text = match r.meta.direction.unwrap() {
                Direction::EnToX => r.output.clone(),
                Direction::XToEn => r.input.clone(),
            };
            zh_sides.push(zh_text);
        }
        let unique: std::collections::HashSet<_> = zh_sides.iter().collect();
        assert_eq!(unique.len(), zh_sides.len());
    }

    #[test]
    fn mi_eval_shape_and_roundtrip() {
        let seeds: Vec<String> = (0..10).map(|i| format!("seed {i}\twith tab")).collect();
        let mut translations = BTreeMap::new();
        for l in ["zh", "ar"] {
            translations.insert(
                lang(l),
                (0..10).map(|i| format!("{l} row {i}\nsecond line")).collect(),
            );
        }
        let set = build_mi_eval(&seeds, &translations).unwrap();
        assert_eq!(set.rows.len(), 10);
        assert_eq!(set.rows[0].texts.len(), 3);
        let tsv = set.to_tsv();
        let back = MiEvalSet::from_tsv(&tsv).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn mi_eval_empty_translations_is_english_only() {
        let seeds = vec!["only english".to_string()];
        let set = build_mi_eval(&seeds, &BTreeMap::new()).unwrap();
        assert_eq!(set.rows[0].texts, vec!["only english".to_string()]);
        assert!(set.langs.is_empty());
    }

    #[test]
    fn mi_eval_misalignment_errors() {
        let seeds = vec!["a".to_string(), "b".to_string()];
        let mut translations = BTreeMap::new();
        translations.insert(lang("zh"), vec!["一".to_string()]);
        assert!(matches!(
            build_mi_eval(&seeds, &translations),
            Err(BuildError::Misaligned { expected: 2, got: 1, .. })
        ));
    }
}
