//! Scoring of model outputs: exact match, corpus BLEU, paired-bootstrap
//! significance, externally computed learned-metric scores, and an
//! LLM-judge client.

mod bootstrap;
mod external;
mod judge;
mod metrics;

pub use bootstrap::{paired_bootstrap, BootstrapOutcome};
pub use external::ingest_external_scores;
pub use judge::{
    parse_correctness, parse_pairwise, render_correctness_prompt, render_pairwise_prompt,
    summarize_correctness, AuditEntry, HttpChatTransport, JudgeClient, JudgeOptions,
    JudgeSummary, JudgeTransport, JudgeVerdict, PairwiseOutcome, TransportError, VerdictKind,
    CORRECTNESS_TEMPLATE, PAIRWISE_TEMPLATE,
};
pub use metrics::{bleu, exact_match, normalize_answer, BleuOptions, Tokenizer};

use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Lang;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("hypotheses and references differ in length: {hyps} vs {refs}")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("score lists differ in length: {a} vs {b}")]
    ScoreLengthMismatch { a: usize, b: usize },
    #[error("paired bootstrap needs at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("paired bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(u32),
    #[error("reference answer must be non-empty (item `{0}`)")]
    EmptyReference(String),
    #[error("judge transport: {0}")]
    Transport(#[from] TransportError),
}

/// One QA evaluation item: reference answer plus a model hypothesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    #[serde(default)]
    pub context: String,
    #[serde(default)]
    pub question: String,
    pub reference_answer: String,
    #[serde(default)]
    pub hypothesis: String,
    pub lang: Lang,
}

impl QAItem {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.reference_answer.trim().is_empty() {
            return Err(EvalError::EmptyReference(self.id.clone()));
        }
        Ok(())
    }
}

/// Read QA items from JSONL.
pub fn read_qa_items(path: &Path) -> Result<Vec<QAItem>, EvalError> {
    let file = std::fs::File::open(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut items = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| EvalError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: QAItem = serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        item.validate()?;
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub id: String,
    pub score: f64,
}

/// How [`EvalReport::aggregate`] relates to the per-item scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Aggregate is the mean of the per-item scores.
    Mean,
    /// Aggregate is recomputed from pooled corpus statistics; per-item
    /// scores are diagnostic only.
    Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub baseline_name: String,
    pub p_value: f64,
    pub n_resamples: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Per-item and aggregate scores for one metric run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric_name: String,
    pub per_item: Vec<ItemScore>,
    pub aggregate: f64,
    pub n: usize,
    pub aggregation: Aggregation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significance: Option<Significance>,
}

impl EvalReport {
    pub(crate) fn from_mean(metric_name: &str, per_item: Vec<ItemScore>) -> Self {
        let n = per_item.len();
        let aggregate = if n == 0 {
            0.0
        } else {
            per_item.iter().map(|s| s.score).sum::<f64>() / n as f64
        };
        EvalReport {
            metric_name: metric_name.to_string(),
            per_item,
            aggregate,
            n,
            aggregation: Aggregation::Mean,
            significance: None,
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        self.per_item.iter().map(|s| s.score).collect()
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_report_aggregates() {
        let report = EvalReport::from_mean(
            "test",
            vec![
                ItemScore { id: "a".into(), score: 1.0 },
                ItemScore { id: "b".into(), score: 0.0 },
            ],
        );
        assert_eq!(report.aggregate, 0.5);
        assert_eq!(report.n, 2);
        assert_eq!(report.aggregation, Aggregation::Mean);
    }

    #[test]
    fn qa_items_jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("items.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"1\",\"context\":\"c\",\"question\":\"q\",\"reference_answer\":\"r\",\"hypothesis\":\"h\",\"lang\":\"en\"}\n",
        )
        .unwrap();
        let items = read_qa_items(&path).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].id, "1");

        std::fs::write(
            &path,
            "{\"id\":\"1\",\"reference_answer\":\"  \",\"lang\":\"en\"}\n",
        )
        .unwrap();
        assert!(matches!(read_qa_items(&path), Err(EvalError::EmptyReference(_))));
    }
}
