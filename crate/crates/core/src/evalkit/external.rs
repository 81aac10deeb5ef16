//! Ingestion of externally computed learned-metric scores (COMET, BLEURT)
//! for aggregation and significance testing. The models themselves are
//! never run here.

use std::collections::HashSet;
use std::path::Path;

use super::{EvalError, EvalReport, ItemScore};

/// Wrap a TSV of `id<TAB>score` rows into a mean-aggregated report.
pub fn ingest_external_scores(path: &Path, metric_name: &str) -> Result<EvalReport, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut per_item = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (id, raw) = match (cols.next(), cols.next(), cols.next()) {
            (Some(id), Some(score), None) => (id.trim(), score.trim()),
            _ => {
                return Err(EvalError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "expected `id<TAB>score`".into(),
                })
            }
        };
        let score: f64 = raw.parse().map_err(|_| EvalError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("non-numeric score `{raw}`"),
        })?;
        if !ids.insert(id.to_string()) {
            return Err(EvalError::DuplicateId(id.to_string()));
        }
        per_item.push(ItemScore {
            id: id.to_string(),
            score,
        });
    }
    Ok(EvalReport::from_mean(metric_name, per_item))
}
