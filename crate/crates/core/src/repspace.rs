//! Representation-space analysis from per-layer embedding dumps:
//! cross-lingual alignment scores, language separability via
//! leave-one-out kNN, and deterministic 2D PCA projection.
//!
//! Dumps are produced externally (one JSONL record per sentence per
//! language per layer); nothing here touches a model runtime.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Lang;
use crate::simlang::{cosine, EmbeddingDump, EmbeddingRecord, SimError};

#[derive(Debug, Error)]
pub enum RepError {
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
    #[error("layer dump needs at least 2 languages, found {0}")]
    TooFewLanguages(usize),
    #[error("pivot language `{0}` is not in the dump")]
    MissingPivot(Lang),
    #[error("language `{lang}` shares no sentence ids with the pivot")]
    NoSharedIds { lang: Lang },
    #[error("need at least k+1 = {needed} records per language, `{lang}` has {got}")]
    TooFewRecords { lang: Lang, needed: usize, got: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Multi-way embeddings extracted at one model layer.
#[derive(Debug, Clone)]
pub struct LayerDump {
    pub layer_index: u32,
    pub records: EmbeddingDump,
}

impl LayerDump {
    pub fn new(layer_index: u32, records: EmbeddingDump) -> Result<Self, RepError> {
        let langs = records.languages();
        if langs.len() < 2 {
            return Err(RepError::TooFewLanguages(langs.len()));
        }
        Ok(LayerDump {
            layer_index,
            records,
        })
    }
}

#[derive(Debug, Deserialize)]
struct LayeredRecord {
    layer: u32,
    lang: Lang,
    sentence_id: u64,
    vector: Vec<f64>,
}

/// Load a layered JSONL dump (`{"layer", "lang", "sentence_id", "vector"}`)
/// and group records into one [`LayerDump`] per layer, ascending.
pub fn load_layer_dumps(path: &Path) -> Result<Vec<LayerDump>, RepError> {
    let file = std::fs::File::open(path).map_err(|e| RepError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut by_layer: BTreeMap<u32, Vec<EmbeddingRecord>> = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| RepError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LayeredRecord = serde_json::from_str(&line).map_err(|e| RepError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        by_layer.entry(rec.layer).or_default().push(EmbeddingRecord {
            lang: rec.lang,
            sentence_id: rec.sentence_id,
            vector: rec.vector,
        });
    }
    by_layer
        .into_iter()
        .map(|(layer, records)| LayerDump::new(layer, EmbeddingDump::new(records)?))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignmentScore {
    pub layer_index: u32,
    pub pivot: Lang,
    /// Mean cosine to the pivot over shared sentence ids, per non-pivot
    /// language.
    pub per_lang: BTreeMap<Lang, f64>,
    /// Unweighted mean of the per-language means.
    pub overall: f64,
}

/// Mean cosine of every non-pivot language to the pivot over aligned ids.
pub fn alignment_score(dump: &LayerDump, pivot_lang: &Lang) -> Result<AlignmentScore, RepError> {
    let langs = dump.records.languages();
    if !langs.contains(pivot_lang) {
        return Err(RepError::MissingPivot(pivot_lang.clone()));
    }
    let pivot = dump.records.by_lang(pivot_lang);
    let mut per_lang = BTreeMap::new();
    for lang in langs.iter().filter(|l| *l != pivot_lang) {
        let vectors = dump.records.by_lang(lang);
        let mut sum = 0.0;
        let mut n = 0usize;
        for (id, v) in &vectors {
            let Some(pv) = pivot.get(id) else { continue };
            let c = cosine(v, pv).ok_or(SimError::ZeroNorm {
                lang: lang.clone(),
                sentence_id: *id,
            })?;
            sum += c;
            n += 1;
        }
        if n == 0 {
            return Err(RepError::NoSharedIds { lang: lang.clone() });
        }
        per_lang.insert(lang.clone(), sum / n as f64);
    }
    let overall = per_lang.values().sum::<f64>() / per_lang.len() as f64;
    Ok(AlignmentScore {
        layer_index: dump.layer_index,
        pivot: pivot_lang.clone(),
        per_lang,
        overall,
    })
}

/// Leave-one-out kNN language-classification accuracy under cosine
/// distance.
///
/// Clearly separated language clouds score near 1.0; overlapping clouds
/// fall toward chance. Determinism: neighbors are ordered by (distance,
/// sentence_id, lang); vote ties go to the tied language appearing first
/// in that neighbor order.
pub fn separability(dump: &LayerDump, k: usize) -> Result<f64, RepError> {
    if k == 0 {
        return Err(RepError::ZeroK);
    }
    let records = dump.records.records();
    for lang in dump.records.languages() {
        let count = records.iter().filter(|r| r.lang == lang).count();
        if count < k + 1 {
            return Err(RepError::TooFewRecords {
                lang,
                needed: k + 1,
                got: count,
            });
        }
    }

    let mut correct = 0usize;
    for (qi, query) in records.iter().enumerate() {
        let mut neighbors: Vec<(f64, u64, &Lang)> = records
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != qi)
            .map(|(_, r)| {
                let c = cosine(&query.vector, &r.vector).unwrap_or(-1.0);
                (1.0 - c, r.sentence_id, &r.lang)
            })
            .collect();
        neighbors.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(b.2))
        });
        neighbors.truncate(k);

        let mut votes: Vec<(&Lang, usize)> = Vec::new();
        for (_, _, lang) in &neighbors {
            match votes.iter_mut().find(|(l, _)| l == lang) {
                Some((_, n)) => *n += 1,
                None => votes.push((lang, 1)),
            }
        }
        // votes keeps first-seen order, so max_by_key with a strict
        // comparison resolves ties toward the earlier neighbor
        let mut winner = votes[0];
        for v in &votes[1..] {
            if v.1 > winner.1 {
                winner = *v;
            }
        }
        if winner.0 == &query.lang {
            correct += 1;
        }
    }
    Ok(correct as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct Projection {
    pub layer_index: u32,
    pub points: Vec<ProjectedPoint>,
    /// Set when the input had no variance at all; every coordinate is
    /// (0, 0) in that case.
    pub degenerate: bool,
    /// Variance captured by each of the two axes (population convention).
    pub explained_variance: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectedPoint {
    pub lang: Lang,
    pub sentence_id: u64,
    pub x: f64,
    pub y: f64,
}

impl Projection {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lang\tsentence_id\tx\ty\n");
        for p in &self.points {
            out.push_str(&format!("{}\t{}\t{:.10e}\t{:.10e}\n", p.lang, p.sentence_id, p.x, p.y));
        }
        out
    }
}

/// PCA onto the top-2 principal components of the mean-centered vectors.
///
/// Sign convention: within each axis the loading of largest magnitude
/// (lowest index on ties) is made positive. Axes are ordered by singular
/// value, descending.
pub fn project_2d(dump: &LayerDump) -> Result<Projection, RepError> {
    let records = dump.records.records();
    let n = records.len();
    let d = dump.records.dim();

    let mut mean = vec![0.0f64; d];
    for r in records {
        for (m, v) in mean.iter_mut().zip(&r.vector) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| records[i].vector[j] - mean[j]);

    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());

    let total_scale: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    if total_scale <= f64::EPSILON * n as f64 {
        let points = records
            .iter()
            .map(|r| ProjectedPoint {
                lang: r.lang.clone(),
                sentence_id: r.sentence_id,
                x: 0.0,
                y: 0.0,
            })
            .collect();
        return Ok(Projection {
            layer_index: dump.layer_index,
            points,
            degenerate: true,
            explained_variance: [0.0, 0.0],
        });
    }

    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut explained = [0.0f64; 2];
    for (slot, &idx) in order.iter().take(2).enumerate() {
        let mut axis: Vec<f64> = (0..d).map(|j| v_t[(idx, j)]).collect();
        let sigma = svd.singular_values[idx];
        explained[slot] = sigma * sigma / n as f64;
        // fewer singular values than 2 axes cannot happen with d >= 2,
        // but a zero sigma means the axis direction is arbitrary; zero it
        if sigma <= f64::EPSILON * total_scale.sqrt() {
            axis = vec![0.0; d];
        } else {
            let lead = (0..d)
                .max_by(|&a, &b| axis[a].abs().partial_cmp(&axis[b].abs()).unwrap().then(b.cmp(&a)))
                .unwrap();
            if axis[lead] < 0.0 {
                for a in &mut axis {
                    *a = -*a;
                }
            }
        }
        axes.push(axis);
    }
    while axes.len() < 2 {
        axes.push(vec![0.0; d]);
    }

    let points = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let project = |axis: &[f64]| -> f64 {
                (0..d).map(|j| centered[(i, j)] * axis[j]).sum()
            };
            ProjectedPoint {
                lang: r.lang.clone(),
                sentence_id: r.sentence_id,
                x: project(&axes[0]),
                y: project(&axes[1]),
            }
        })
        .collect();

    Ok(Projection {
        layer_index: dump.layer_index,
        points,
        degenerate: false,
        explained_variance: explained,
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

    fn dump(records: Vec<EmbeddingRecord>) -> LayerDump {
        LayerDump::new(0, EmbeddingDump::new(records).unwrap()).unwrap()
    }

    #[test]
    fn identical_clouds_align_perfectly() {
        let d = dump(vec![
            rec("en", 1, &[1.0, 2.0]),
            rec("en", 2, &[0.5, 0.1]),
            rec("zh", 1, &[1.0, 2.0]),
            rec("zh", 2, &[0.5, 0.1]),
        ]);
        let score = alignment_score(&d, &lang("en")).unwrap();
        assert_eq!(score.per_lang[&lang("zh")], 1.0);
        assert_eq!(score.overall, 1.0);
    }

    #[test]
    fn orthogonal_language_scores_zero() {
        let d = dump(vec![
            rec("en", 1, &[1.0, 0.0]),
            rec("en", 2, &[1.0, 0.0]),
            rec("zh", 1, &[0.0, 1.0]),
            rec("zh", 2, &[0.0, -1.0]),
        ]);
        let score = alignment_score(&d, &lang("en")).unwrap();
        assert_eq!(score.per_lang[&lang("zh")], 0.0);
    }

    #[test]
    fn three_language_fixture_matches_hand_computation() {
        // per-language means frozen from an independent cosine
        // computation over the same vectors
        let d = dump(vec![
            rec("en", 1, &[1.0, 0.0, 0.0]),
            rec("en", 2, &[0.0, 1.0, 0.0]),
            rec("en", 3, &[0.0, 0.0, 1.0]),
            rec("aa", 1, &[1.0, 1.0, 0.0]),
            rec("aa", 2, &[0.0, 1.0, 1.0]),
            rec("aa", 3, &[1.0, 0.0, 1.0]),
            rec("bb", 1, &[0.0, 1.0, 0.0]),
            rec("bb", 2, &[0.0, 1.0, 0.0]),
            rec("bb", 3, &[1.0, 1.0, 1.0]),
        ]);
        let score = alignment_score(&d, &lang("en")).unwrap();
        assert_relative_eq!(score.per_lang[&lang("aa")], 0.70710678118654746, max_relative = 1e-12);
        assert_relative_eq!(score.per_lang[&lang("bb")], 0.52578342306320858, max_relative = 1e-12);
        assert_relative_eq!(score.overall, 0.61644510212487802, max_relative = 1e-12);
    }

    #[test]
    fn alignment_requires_shared_ids_and_pivot() {
        let d = dump(vec![
            rec("en", 1, &[1.0, 0.0]),
            rec("en", 2, &[1.0, 0.0]),
            rec("zh", 3, &[1.0, 0.0]),
        ]);
        assert!(matches!(
            alignment_score(&d, &lang("en")),
            Err(RepError::NoSharedIds { .. })
        ));
        assert!(matches!(
            alignment_score(&d, &lang("tr")),
            Err(RepError::MissingPivot(_))
        ));
    }

    #[test]
    fn alignment_is_scale_invariant_per_language() {
        let base = vec![
            rec("en", 1, &[1.0, 2.0, 0.3]),
            rec("en", 2, &[0.4, -1.0, 2.0]),
            rec("zh", 1, &[0.8, 1.9, 0.4]),
            rec("zh", 2, &[0.5, -1.2, 1.7]),
        ];
        let a = alignment_score(&dump(base.clone()), &lang("en")).unwrap();
        let scaled: Vec<_> = base
            .into_iter()
            .map(|mut r| {
                if r.lang == lang("zh") {
                    r.vector.iter_mut().for_each(|x| *x *= 250.0);
                }
                r
            })
            .collect();
        let b = alignment_score(&dump(scaled), &lang("en")).unwrap();
        assert_relative_eq!(a.overall, b.overall, max_relative = 1e-12);
    }

    #[test]
    fn well_separated_clouds_classify_perfectly() {
        // disjoint orthants, margin far beyond cloud diameter
        let mut records = Vec::new();
        for i in 0..8u64 {
            let off = i as f64 * 0.01;
            records.push(rec("en", i, &[10.0 + off, 0.5, 0.0]));
            records.push(rec("zh", i, &[-10.0 - off, 0.0, 0.5]));
        }
        let acc = separability(&dump(records), 3).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn identical_clouds_hit_the_documented_tie_value() {
        // with duplicate twins across languages the cross-language twin
        // is always the nearest neighbor, so leave-one-out accuracy
        // collapses to 0.0 under the documented tie rule
        let mut records = Vec::new();
        for i in 0..6u64 {
            let v = [i as f64 + 1.0, (i as f64 * 0.7).sin() + 2.0];
            records.push(rec("aa", i, &v));
            records.push(rec("bb", i, &v));
        }
        let acc = separability(&dump(records), 3).unwrap();
        assert_eq!(acc, 0.0);
    }

    #[test]
    fn overlapping_independent_clouds_sit_near_chance() {
        // both languages drawn independently from one distribution
        let mut rng = crate::det::rng_from_seed(5);
        let mut draw = |l: &str, id: u64| {
            let v = [
                (crate::det::index_below(&mut rng, 1000) as f64) / 500.0 - 1.0,
                (crate::det::index_below(&mut rng, 1000) as f64) / 500.0 - 1.0,
                1.0,
            ];
            rec(l, id, &v)
        };
        let mut records = Vec::new();
        for i in 0..30u64 {
            records.push(draw("aa", i));
        }
        for i in 0..30u64 {
            records.push(draw("bb", i));
        }
        let acc = separability(&dump(records), 5).unwrap();
        assert!((0.25..=0.75).contains(&acc), "accuracy {acc} not near chance");
    }

    #[test]
    fn separability_needs_enough_records() {
        let d = dump(vec![
            rec("en", 1, &[1.0, 0.0]),
            rec("en", 2, &[0.9, 0.1]),
            rec("zh", 1, &[0.0, 1.0]),
            rec("zh", 2, &[0.1, 0.9]),
        ]);
        assert!(separability(&d, 2).is_err());
        assert!(separability(&d, 0).is_err());
        assert!(separability(&d, 1).is_ok());
    }

    #[test]
    fn axis_aligned_2d_input_projects_to_itself() {
        // mean-centered with diagonal covariance and larger x-variance
        let d = dump(vec![
            rec("en", 1, &[3.0, 0.0]),
            rec("en", 2, &[-3.0, 0.0]),
            rec("zh", 1, &[0.0, 1.0]),
            rec("zh", 2, &[0.0, -1.0]),
        ]);
        let p = project_2d(&d).unwrap();
        assert!(!p.degenerate);
        for (point, rec) in p.points.iter().zip(d.records.records()) {
            assert_relative_eq!(point.x, rec.vector[0], epsilon = 1e-10);
            assert_relative_eq!(point.y, rec.vector[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn all_identical_vectors_are_degenerate() {
        let d = dump(vec![
            rec("en", 1, &[2.0, 3.0]),
            rec("en", 2, &[2.0, 3.0]),
            rec("zh", 1, &[2.0, 3.0]),
        ]);
        let p = project_2d(&d).unwrap();
        assert!(p.degenerate);
        assert!(p.points.iter().all(|pt| pt.x == 0.0 && pt.y == 0.0));
    }

    #[test]
    fn five_point_fixture_matches_eigendecomposition_oracle() {
        // expected coordinates frozen from an independent
        // covariance-eigendecomposition of the same five points
        let pts = [
            [2.0, 1.0, 0.5],
            [4.0, 1.5, 0.2],
            [6.0, 3.5, 0.9],
            [8.0, 4.0, 0.1],
            [10.0, 5.0, 0.6],
        ];
        let mut records = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            records.push(rec(if i % 2 == 0 { "en" } else { "zh" }, i as u64, p));
        }
        let proj = project_2d(&dump(records)).unwrap();
        let expected_x = [
            -4.4704443943477354,
            -2.4714947355893471,
            0.23749473425061374,
            2.2326250310242073,
            4.4718193646622613,
        ];
        let expected_y = [
            0.12660936974288572,
            -0.44201109761765939,
            0.62187368070261029,
            -0.31099021857514741,
            0.0045182657473106522,
        ];
        for (i, p) in proj.points.iter().enumerate() {
            assert_relative_eq!(p.x, expected_x[i], epsilon = 1e-8);
            assert_relative_eq!(p.y, expected_y[i], epsilon = 1e-8);
        }
        assert_relative_eq!(proj.explained_variance[0], 10.226269203824387, epsilon = 1e-8);
    }

    #[test]
    fn layered_jsonl_loads_by_layer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layers.jsonl");
        std::fs::write(
            &path,
            "{\"layer\":1,\"lang\":\"en\",\"sentence_id\":0,\"vector\":[1.0,0.0]}\n\
             {\"layer\":0,\"lang\":\"en\",\"sentence_id\":0,\"vector\":[1.0,0.0]}\n\
             {\"layer\":0,\"lang\":\"zh\",\"sentence_id\":0,\"vector\":[0.0,1.0]}\n\
             {\"layer\":1,\"lang\":\"zh\",\"sentence_id\":0,\"vector\":[0.5,0.5]}\n",
        )
        .unwrap();
        let dumps = load_layer_dumps(&path).unwrap();
        assert_eq!(dumps.len(), 2);
        assert_eq!(dumps[0].layer_index, 0);
        assert_eq!(dumps[1].layer_index, 1);
        assert_eq!(dumps[0].records.records().len(), 2);
    }
}
