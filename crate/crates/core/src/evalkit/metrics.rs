//! Exact match and corpus BLEU.

use std::collections::HashMap;

use super::{Aggregation, EvalError, EvalReport, ItemScore, QAItem};
use crate::corpus::normalize_ws;

/// SQuAD-style answer normalization: trim, collapse whitespace, lowercase
/// (a no-op for caseless scripts), and strip trailing terminal
/// punctuation (`.` `。` `؟` `?` `!` `;`).
pub fn normalize_answer(s: &str) -> String {
    let mut out = normalize_ws(s).to_lowercase();
    loop {
        let trimmed = out.trim_end();
        let Some(last) = trimmed.chars().last() else { break };
        if matches!(last, '.' | '。' | '؟' | '?' | '!' | ';') {
            let cut = trimmed.len() - last.len_utf8();
            out.truncate(cut);
        } else {
            out.truncate(trimmed.len());
            break;
        }
    }
    out
}

/// Per-item 1/0 on normalized equality of hypothesis and reference;
/// aggregate is the mean.
pub fn exact_match(items: &[QAItem]) -> Result<EvalReport, EvalError> {
    let mut per_item = Vec::with_capacity(items.len());
    for item in items {
        item.validate()?;
        let score = if normalize_answer(&item.hypothesis) == normalize_answer(&item.reference_answer) {
            1.0
        } else {
            0.0
        };
        per_item.push(ItemScore {
            id: item.id.clone(),
            score,
        });
    }
    Ok(EvalReport::from_mean("exact_match", per_item))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tokenizer {
    /// Split on Unicode whitespace.
    Whitespace,
    /// One token per non-whitespace character; a stand-in for subword
    /// tokenization on space-free scripts.
    Char,
    /// Input is already tokenized; tokens are whitespace-separated.
    ExternalSubword,
}

impl Tokenizer {
    pub fn name(&self) -> &'static str {
        match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::Char => "char",
            Tokenizer::ExternalSubword => "external_subword",
        }
    }

    fn tokenize(&self, s: &str) -> Vec<String> {
        match self {
            Tokenizer::Whitespace | Tokenizer::ExternalSubword => {
                s.split_whitespace().map(str::to_string).collect()
            }
            Tokenizer::Char => s.chars().filter(|c| !c.is_whitespace()).map(String::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BleuOptions {
    pub tokenizer: Tokenizer,
    /// Added to every n-gram match count when set; default is no
    /// smoothing, so any zero precision zeroes the corpus score.
    pub smoothing_epsilon: Option<f64>,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions {
            tokenizer: Tokenizer::Whitespace,
            smoothing_epsilon: None,
        }
    }
}

const MAX_ORDER: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_default() += 1;
        }
    }
    counts
}

struct BleuStats {
    matched: [u64; MAX_ORDER],
    total: [u64; MAX_ORDER],
    hyp_len: u64,
    ref_len: u64,
}

fn accumulate(hyp: &[String], reference: &[String], stats: &mut BleuStats) {
    stats.hyp_len += hyp.len() as u64;
    stats.ref_len += reference.len() as u64;
    for n in 1..=MAX_ORDER {
        let hyp_counts = ngram_counts(hyp, n);
        let ref_counts = ngram_counts(reference, n);
        for (gram, count) in &hyp_counts {
            stats.total[n - 1] += count;
            let clip = ref_counts.get(gram).copied().unwrap_or(0);
            stats.matched[n - 1] += (*count).min(clip);
        }
    }
}

fn score_from_stats(stats: &BleuStats, epsilon: Option<f64>) -> f64 {
    let mut log_sum = 0.0;
    for n in 0..MAX_ORDER {
        let (matched, total) = (stats.matched[n] as f64, stats.total[n] as f64);
        let p = match epsilon {
            Some(eps) => {
                if total == 0.0 {
                    return 0.0;
                }
                (matched + eps) / (total + eps)
            }
            None => {
                if matched == 0.0 || total == 0.0 {
                    return 0.0;
                }
                matched / total
            }
        };
        log_sum += p.ln();
    }
    // zero-length hypotheses never reach here: their unigram total is 0
    let bp = if stats.hyp_len > stats.ref_len {
        1.0
    } else {
        (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
    };
    100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
}

/// Corpus-level BLEU on [0, 100]: geometric mean of modified n-gram
/// precisions (n = 1..4) pooled over the corpus, with the brevity
/// penalty. Per-item scores are diagnostic sentence-level values computed
/// with the same formula; the aggregate comes from the pooled statistics.
pub fn bleu(hypotheses: &[String], references: &[String], opts: BleuOptions) -> Result<EvalReport, EvalError> {
    if hypotheses.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut corpus = BleuStats {
        matched: [0; MAX_ORDER],
        total: [0; MAX_ORDER],
        hyp_len: 0,
        ref_len: 0,
    };
    let mut per_item = Vec::with_capacity(hypotheses.len());
    for (i, (h, r)) in hypotheses.iter().zip(references).enumerate() {
        let hyp = opts.tokenizer.tokenize(h);
        let reference = opts.tokenizer.tokenize(r);
        let mut sentence = BleuStats {
            matched: [0; MAX_ORDER],
            total: [0; MAX_ORDER],
            hyp_len: 0,
            ref_len: 0,
        };
        accumulate(&hyp, &reference, &mut sentence);
        for n in 0..MAX_ORDER {
            corpus.matched[n] += sentence.matched[n];
            corpus.total[n] += sentence.total[n];
        }
        corpus.hyp_len += sentence.hyp_len;
        corpus.ref_len += sentence.ref_len;
        per_item.push(ItemScore {
            id: (i + 1).to_string(),
            score: score_from_stats(&sentence, opts.smoothing_epsilon),
        });
    }
    let aggregate = score_from_stats(&corpus, opts.smoothing_epsilon);
    let n = per_item.len();
    Ok(EvalReport {
        metric_name: format!("bleu-{}", opts.tokenizer.name()),
        per_item,
        aggregate,
        n,
        aggregation: Aggregation::Corpus,
        significance: None,
    })
}
