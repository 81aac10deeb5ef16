//! Per-subcommand JSON configuration. Unknown fields are rejected so a
//! typo fails validation (exit 2) instead of silently changing a run.
//! Relative paths in a config resolve against the config file's
//! directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xtune_core::corpus::QualityFilter;
use xtune_core::evalkit::Tokenizer;
use xtune_core::Lang;

/// `"default"`, `"off"`, or a number.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum QualitySetting {
    #[default]
    #[serde(skip)]
    Unset,
    Named(NamedQuality),
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedQuality {
    Default,
    Off,
}

impl QualitySetting {
    pub fn to_filter(self) -> QualityFilter {
        match self {
            QualitySetting::Unset | QualitySetting::Named(NamedQuality::Default) => QualityFilter::Default,
            QualitySetting::Named(NamedQuality::Off) => QualityFilter::Off,
            QualitySetting::Threshold(t) => QualityFilter::MinScore(t),
        }
    }

    pub fn parse_flag(raw: &str) -> Result<Self, String> {
        match raw {
            "default" => Ok(QualitySetting::Named(NamedQuality::Default)),
            "off" => Ok(QualitySetting::Named(NamedQuality::Off)),
            other => other
                .parse::<f64>()
                .map(QualitySetting::Threshold)
                .map_err(|_| format!("--min-quality expects `default`, `off`, or a number, got `{other}`")),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    pub manifest: String,
    #[serde(default)]
    pub min_quality: QualitySetting,
    #[serde(default = "default_true")]
    pub dedup: bool,
    #[serde(default)]
    pub declared: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityConfig {
    pub dump: String,
    pub targets: Vec<Lang>,
    #[serde(default)]
    pub pivot: Option<Lang>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub points: String,
    pub lang: Lang,
    /// Inline similarity coefficient, or a profiles JSON produced by the
    /// `similarity` subcommand.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub profiles: Option<String>,
    #[serde(default)]
    pub setting_tag: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawPlotConfig {
    pub law: String,
    pub min_scale: u64,
    pub max_scale: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_true")]
    pub log_spaced: bool,
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocateConfig {
    /// Path to a problem JSON, or inline spec under `inline`.
    #[serde(default)]
    pub problem: Option<String>,
    #[serde(default)]
    pub inline: Option<xtune_core::allocator::ProblemSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default)]
    pub problem: Option<String>,
    #[serde(default)]
    pub inline: Option<xtune_core::allocator::ProblemSpec>,
    /// Explicit amounts, or a result JSON with an `amounts` field.
    #[serde(default)]
    pub amounts: Option<Vec<u64>>,
    #[serde(default)]
    pub result: Option<String>,
    #[serde(default)]
    pub tolerance: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub recipe: String,
    pub manifest: String,
    #[serde(default)]
    pub min_quality: QualitySetting,
    #[serde(default = "default_true")]
    pub dedup: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiEvalConfig {
    pub seeds: String,
    #[serde(default)]
    pub translations: BTreeMap<Lang, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BleuConfig {
    pub hypotheses: String,
    pub references: String,
    #[serde(default)]
    pub tokenizer: Option<Tokenizer>,
    #[serde(default)]
    pub smoothing_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmConfig {
    pub items: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Eval-report JSON paths; items are paired by id.
    pub system_a: String,
    pub system_b: String,
    #[serde(default = "default_resamples")]
    pub n_resamples: u32,
    pub seed: u64,
    #[serde(default)]
    pub baseline_name: Option<String>,
}

fn default_resamples() -> u32 {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMode {
    Correctness,
    Pairwise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeConfig {
    /// Correctness mode: QA items JSONL. Pairwise mode: JSONL of
    /// `{id, question, answer_a, answer_b}`.
    pub items: String,
    pub mode: JudgeMode,
    #[serde(default)]
    pub first_n: Option<usize>,
    /// Overridden by the `JUDGE_ENDPOINT` environment variable.
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub max_in_flight: Option<usize>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_model() -> String {
    "gpt-3.5-turbo".to_string()
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepspaceConfig {
    pub dump: String,
    #[serde(default)]
    pub pivot: Option<Lang>,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    5
}

/// Pairwise judge input row.
#[derive(Debug, Clone, Deserialize)]
pub struct PairwiseItem {
    pub id: String,
    pub question: String,
    pub answer_a: String,
    pub answer_b: String,
}

/// Parse a config file, resolving it relative to the current directory.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, PathBuf), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let config: T =
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((config, base))
}

/// Resolve a config-referenced path against the config's directory.
pub fn resolve(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Config paths must exist before the run starts.
pub fn require_file(path: &Path) -> Result<(), String> {
    if path.is_file() {
        Ok(())
    } else {
        Err(format!("referenced file does not exist: {}", path.display()))
    }
}
