//! Language-similarity coefficients from multi-way sentence embeddings.
//!
//! The similarity of a target language to the pivot is the mean cosine
//! between embeddings of the same sentence in both languages, mapped from
//! `[-1, 1]` to `(0, 1)` via `(c + 1) / 2` and clamped to
//! `[GAMMA_EPS, 1 - GAMMA_EPS]`. Embeddings come from an external encoder
//! as a JSON Lines dump; this module never runs a model.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Lang, LangError};

/// Clamp margin keeping gamma inside the open interval (0, 1).
pub const GAMMA_EPS: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SimError {
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
    #[error("embedding dump invalid: {0}")]
    InvalidDump(String),
    #[error("no sentence id is present for both `{target}` and `{pivot}`")]
    NoSharedIds { target: Lang, pivot: Lang },
    #[error("zero-norm vector for ({lang}, {sentence_id})")]
    ZeroNorm { lang: Lang, sentence_id: u64 },
    #[error("gamma {0} outside the open interval (0, 1)")]
    GammaOutOfRange(f64),
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// A language code with its similarity coefficient to the pivot language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub lang: Lang,
    /// Similarity coefficient in the open interval (0, 1).
    pub gamma: f64,
    /// Number of shared sentence ids the coefficient was averaged over;
    /// 0 for manually supplied profiles.
    pub sample_count: usize,
    pub method_tag: String,
}

impl LanguageProfile {
    /// Manually supplied coefficient; rejects values on or outside the
    /// (0, 1) boundary.
    pub fn manual(lang: Lang, gamma: f64) -> Result<Self, SimError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(SimError::GammaOutOfRange(gamma));
        }
        Ok(LanguageProfile {
            lang,
            gamma,
            sample_count: 0,
            method_tag: "manual".to_string(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub lang: Lang,
    pub sentence_id: u64,
    pub vector: Vec<f64>,
}

/// Sentence embeddings for one or more languages over a shared id space.
#[derive(Debug, Clone)]
pub struct EmbeddingDump {
    records: Vec<EmbeddingRecord>,
    dim: usize,
}

impl EmbeddingDump {
    pub fn new(records: Vec<EmbeddingRecord>) -> Result<Self, SimError> {
        if records.is_empty() {
            return Err(SimError::InvalidDump("no records".into()));
        }
        let dim = records[0].vector.len();
        if dim < 2 {
            return Err(SimError::InvalidDump(format!(
                "vector dimension must be at least 2, got {dim}"
            )));
        }
        let mut keys = HashSet::new();
        for r in &records {
            if r.vector.len() != dim {
                return Err(SimError::InvalidDump(format!(
                    "({}, {}) has dimension {}, expected {dim}",
                    r.lang,
                    r.sentence_id,
                    r.vector.len()
                )));
            }
            if r.vector.iter().any(|x| !x.is_finite()) {
                return Err(SimError::InvalidDump(format!(
                    "({}, {}) contains a non-finite component",
                    r.lang, r.sentence_id
                )));
            }
            if !keys.insert((r.lang.clone(), r.sentence_id)) {
                return Err(SimError::InvalidDump(format!(
                    "duplicate record ({}, {})",
                    r.lang, r.sentence_id
                )));
            }
        }
        Ok(EmbeddingDump { records, dim })
    }

    /// Load a JSON Lines dump: `{"lang": ..., "sentence_id": ..., "vector": [...]}`.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let file = std::fs::File::open(path).map_err(|e| SimError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut records = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| SimError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| SimError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        EmbeddingDump::new(records)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn languages(&self) -> Vec<Lang> {
        let mut langs: Vec<Lang> = self
            .records
            .iter()
            .map(|r| r.lang.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        langs.sort();
        langs
    }

    /// Map sentence_id -> vector for one language.
    pub fn by_lang(&self, lang: &Lang) -> BTreeMap<u64, &[f64]> {
        self.records
            .iter()
            .filter(|r| &r.lang == lang)
            .map(|r| (r.sentence_id, r.vector.as_slice()))
            .collect()
    }
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    // identical vectors have cosine exactly 1; computing it would lose
    // the last bit to sqrt rounding
    if a == b {
        return Some(1.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean cosine between target and pivot vectors over shared sentence ids,
/// mapped into (0, 1).
pub fn compute_similarity(
    dump: &EmbeddingDump,
    target_lang: &Lang,
    pivot_lang: &Lang,
) -> Result<LanguageProfile, SimError> {
    let target = dump.by_lang(target_lang);
    let pivot = dump.by_lang(pivot_lang);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (id, tv) in &target {
        let Some(pv) = pivot.get(id) else { continue };
        let c = cosine(tv, pv).ok_or_else(|| {
            // attribute the zero norm to whichever side is degenerate
            let t_norm: f64 = tv.iter().map(|x| x * x).sum();
            if t_norm == 0.0 {
                SimError::ZeroNorm {
                    lang: target_lang.clone(),
                    sentence_id: *id,
                }
            } else {
                SimError::ZeroNorm {
                    lang: pivot_lang.clone(),
                    sentence_id: *id,
                }
            }
        })?;
        sum += c;
        n += 1;
    }
    if n == 0 {
        return Err(SimError::NoSharedIds {
            target: target_lang.clone(),
            pivot: pivot_lang.clone(),
        });
    }
    let mean = sum / n as f64;
    let gamma = ((mean + 1.0) / 2.0).clamp(GAMMA_EPS, 1.0 - GAMMA_EPS);
    Ok(LanguageProfile {
        lang: target_lang.clone(),
        gamma,
        sample_count: n,
        method_tag: "mean-cosine-multiway".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lang(s: &str) -> Lang {
        Lang::new(s).unwrap()
    }

    fn rec(l: &str, id: u64, v: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            lang: lang(l),
            sentence_id: id,
            vector: v.to_vec(),
        }
    }

    #[test]
    fn identical_vectors_hit_the_upper_clamp() {
        let dump = EmbeddingDump::new(vec![
            rec("en", 1, &[1.0, 2.0]),
            rec("en", 2, &[3.0, -1.0]),
            rec("zh", 1, &[1.0, 2.0]),
            rec("zh", 2, &[3.0, -1.0]),
        ])
        .unwrap();
        let p = compute_similarity(&dump, &lang("zh"), &lang("en")).unwrap();
        assert_eq!(p.gamma, 1.0 - GAMMA_EPS);
        assert_eq!(p.sample_count, 2);
        assert_eq!(p.method_tag, "mean-cosine-multiway");
    }

    #[test]
    fn orthogonal_vectors_give_midpoint() {
        let dump = EmbeddingDump::new(vec![
            rec("en", 1, &[1.0, 0.0]),
            rec("en", 2, &[0.0, 1.0]),
            rec("zh", 1, &[0.0, 5.0]),
            rec("zh", 2, &[-2.0, 0.0]),
        ])
        .unwrap();
        let p = compute_similarity(&dump, &lang("zh"), &lang("en")).unwrap();
        assert_eq!(p.gamma, 0.5);
    }

    #[test]
    fn five_pair_fixture_matches_hand_computation() {
        // expected mean cosine and gamma computed independently from the
        // same dot products and norms
        let en = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [0.5, 0.5, 0.5, 0.5],
            [1.0, 2.0, 3.0, 4.0],
        ];
        let zh = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [-0.5, -0.5, -0.5, -0.5],
            [4.0, 3.0, 2.0, 1.0],
        ];
        let mut records = Vec::new();
        for (i, (e, z)) in en.iter().zip(&zh).enumerate() {
            records.push(rec("en", i as u64 + 1, e));
            records.push(rec("zh", i as u64 + 1, z));
        }
        let dump = EmbeddingDump::new(records).unwrap();
        let p = compute_similarity(&dump, &lang("zh"), &lang("en")).unwrap();
        assert_relative_eq!(p.gamma, 0.637_377_344_785_321_38, max_relative = 1e-12);
        assert_eq!(p.sample_count, 5);
    }

    #[test]
    fn no_shared_ids_errors() {
        let dump = EmbeddingDump::new(vec![rec("en", 1, &[1.0, 0.0]), rec("zh", 2, &[1.0, 0.0])]).unwrap();
        assert!(matches!(
            compute_similarity(&dump, &lang("zh"), &lang("en")),
            Err(SimError::NoSharedIds { .. })
        ));
    }

    #[test]
    fn zero_norm_vector_errors() {
        let dump = EmbeddingDump::new(vec![rec("en", 1, &[0.0, 0.0]), rec("zh", 1, &[1.0, 0.0])]).unwrap();
        let err = compute_similarity(&dump, &lang("zh"), &lang("en")).unwrap_err();
        match err {
            SimError::ZeroNorm { lang: l, sentence_id } => {
                assert_eq!(l, lang("en"));
                assert_eq!(sentence_id, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn manual_profile_bounds() {
        let p = LanguageProfile::manual(lang("zh"), 0.31).unwrap();
        assert_eq!(p.gamma, 0.31);
        assert_eq!(p.method_tag, "manual");
        assert_eq!(p.sample_count, 0);
        assert!(LanguageProfile::manual(lang("zh"), 1.0).is_err());
        assert!(LanguageProfile::manual(lang("zh"), 0.0).is_err());
    }

    #[test]
    fn gamma_invariant_under_record_order_and_positive_scaling() {
        let base = vec![
            rec("en", 1, &[1.0, 2.0, 0.5]),
            rec("en", 2, &[-1.0, 0.3, 2.0]),
            rec("en", 3, &[0.2, 0.2, 0.9]),
            rec("zh", 1, &[0.9, 2.1, 0.4]),
            rec("zh", 2, &[-1.2, 0.5, 1.7]),
            rec("zh", 3, &[0.4, 0.1, 1.0]),
        ];
        let g0 = compute_similarity(&EmbeddingDump::new(base.clone()).unwrap(), &lang("zh"), &lang("en"))
            .unwrap()
            .gamma;

        let mut reversed = base.clone();
        reversed.reverse();
        let g1 = compute_similarity(
            &EmbeddingDump::new(reversed).unwrap(),
            &lang("zh"),
            &lang("en"),
        )
        .unwrap()
        .gamma;
        assert_eq!(g0, g1);

        let scaled: Vec<_> = base
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if r.lang == lang("zh") {
                    r.vector.iter_mut().for_each(|x| *x *= 37.5);
                }
                r
            })
            .collect();
        let g2 = compute_similarity(&EmbeddingDump::new(scaled).unwrap(), &lang("zh"), &lang("en"))
            .unwrap()
            .gamma;
        assert_relative_eq!(g0, g2, max_relative = 1e-12);
    }

    #[test]
    fn dump_validation() {
        assert!(EmbeddingDump::new(vec![]).is_err());
        assert!(EmbeddingDump::new(vec![rec("en", 1, &[1.0])]).is_err());
        assert!(EmbeddingDump::new(vec![rec("en", 1, &[1.0, 2.0]), rec("en", 1, &[1.0, 2.0])]).is_err());
        assert!(EmbeddingDump::new(vec![rec("en", 1, &[1.0, 2.0]), rec("en", 2, &[1.0, 2.0, 3.0])]).is_err());
        assert!(EmbeddingDump::new(vec![rec("en", 1, &[f64::NAN, 2.0])]).is_err());
    }

    #[test]
    fn load_jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dump.jsonl");
        std::fs::write(
            &path,
            "{\"lang\":\"en\",\"sentence_id\":0,\"vector\":[1.0,0.0]}\n\
             {\"lang\":\"zh\",\"sentence_id\":0,\"vector\":[0.5,0.5]}\n",
        )
        .unwrap();
        let dump = EmbeddingDump::load(&path).unwrap();
        assert_eq!(dump.records().len(), 2);
        assert_eq!(dump.dim(), 2);
        assert_eq!(dump.languages(), vec![lang("en"), lang("zh")]);
    }
}
