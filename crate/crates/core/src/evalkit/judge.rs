//! LLM-as-judge client: prompt rendering, response parsing, and a
//! chat-completion transport with bounded concurrency and retries.
//!
//! The two judge prompts ship as template files and are rendered
//! byte-identically to those templates with only the placeholders
//! substituted. Responses are parsed structurally (YES/NO token, score
//! lines); anything unparseable is kept as a flagged verdict with the raw
//! response preserved for audit, never silently dropped.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::QAItem;
use crate::det;

/// Correctness-judgment prompt; placeholders `<Context & Question>` and
/// `<Answer>`.
pub const CORRECTNESS_TEMPLATE: &str = include_str!("../../templates/judge_correctness.txt");

/// Pairwise-comparison prompt; rendered after the question and both
/// answers, with its `<Explanation>`/`<Score>` format markers left
/// untouched.
pub const PAIRWISE_TEMPLATE: &str = include_str!("../../templates/judge_pairwise.txt");

pub fn render_correctness_prompt(item: &QAItem) -> String {
    let context_and_question = if item.question.trim().is_empty() {
        item.context.clone()
    } else if item.context.trim().is_empty() {
        item.question.clone()
    } else {
        format!("{}\n{}", item.context, item.question)
    };
    CORRECTNESS_TEMPLATE
        .replace("<Context & Question>", &context_and_question)
        .replace("<Answer>", &item.hypothesis)
}

pub fn render_pairwise_prompt(question: &str, answer_a: &str, answer_b: &str) -> String {
    format!(
        "[Question]\n{question}\n\n\
         [The Start of Assistant 1's Answer]\n{answer_a}\n[The End of Assistant 1's Answer]\n\n\
         [The Start of Assistant 2's Answer]\n{answer_b}\n[The End of Assistant 2's Answer]\n\n\
         {PAIRWISE_TEMPLATE}"
    )
}

/// First standalone YES/NO token (case-insensitive) after the final
/// "Evaluation Form" marker, falling back to the whole response. The
/// echoed "(YES or NO)" hint right after the marker is skipped.
pub fn parse_correctness(response: &str) -> Option<bool> {
    let lower = response.to_lowercase();
    let after_marker = lower.rfind("evaluation form").map(|pos| {
        let mut rest = &lower[pos + "evaluation form".len()..];
        let trimmed = rest.trim_start();
        if let Some(stripped) = trimmed.strip_prefix("(yes or no)") {
            rest = stripped;
        }
        rest.trim_start().trim_start_matches(':')
    });
    if let Some(tail) = after_marker {
        if let Some(v) = first_yes_no_token(tail) {
            return Some(v);
        }
    }
    first_yes_no_token(&lower)
}

fn first_yes_no_token(lower: &str) -> Option<bool> {
    lower
        .split(|c: char| !c.is_alphanumeric())
        .find_map(|token| match token {
            "yes" => Some(true),
            "no" => Some(false),
            _ => None,
        })
}

/// Scores from `Score of the Assistant 1: <n>` / `... 2: <n>` lines;
/// both must be present and within 1..=10.
pub fn parse_pairwise(response: &str) -> Option<(f64, f64)> {
    let score_for = |which: &str| -> Option<f64> {
        let marker = format!("score of the assistant {which}");
        for line in response.lines() {
            let lower = line.to_lowercase();
            if let Some(pos) = lower.find(&marker) {
                let tail = &line[pos + marker.len()..];
                if let Some(score) = first_number(tail) {
                    return Some(score);
                }
            }
        }
        None
    };
    let a = score_for("1")?;
    let b = score_for("2")?;
    if (1.0..=10.0).contains(&a) && (1.0..=10.0).contains(&b) {
        Some((a, b))
    } else {
        None
    }
}

fn first_number(s: &str) -> Option<f64> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            return s[start..i].trim_end_matches('.').parse().ok();
        }
        i += 1;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    CorrectnessYesNo,
    PairwiseScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseOutcome {
    AWins,
    Tie,
    BWins,
}

/// One parsed judge response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub id: String,
    pub kind: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_b: Option<f64>,
    pub raw_response: String,
}

impl JudgeVerdict {
    pub fn is_unparseable(&self) -> bool {
        match self.kind {
            VerdictKind::CorrectnessYesNo => self.correct.is_none(),
            VerdictKind::PairwiseScores => self.score_a.is_none() || self.score_b.is_none(),
        }
    }

    pub fn pairwise_outcome(&self) -> Option<PairwiseOutcome> {
        let (a, b) = (self.score_a?, self.score_b?);
        Some(if a > b {
            PairwiseOutcome::AWins
        } else if a < b {
            PairwiseOutcome::BWins
        } else {
            PairwiseOutcome::Tie
        })
    }
}

/// Correctness accuracy over parseable verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct JudgeSummary {
    pub n: usize,
    pub parseable: usize,
    pub unparseable: usize,
    pub yes: usize,
    pub accuracy: f64,
}

pub fn summarize_correctness(verdicts: &[JudgeVerdict]) -> JudgeSummary {
    let parseable = verdicts.iter().filter(|v| !v.is_unparseable()).count();
    let yes = verdicts.iter().filter(|v| v.correct == Some(true)).count();
    JudgeSummary {
        n: verdicts.len(),
        parseable,
        unparseable: verdicts.len() - parseable,
        yes,
        accuracy: if parseable == 0 {
            0.0
        } else {
            yes as f64 / parseable as f64
        },
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: timeouts, connection failures, 429 and 5xx.
    #[error("transient transport failure: {0}")]
    Transient(String),
    /// Not worth retrying: auth and other 4xx, malformed endpoint replies.
    #[error("fatal transport failure: {0}")]
    Fatal(String),
}

/// Anything that can turn a prompt into a completion.
pub trait JudgeTransport: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, TransportError>;
}

impl<F> JudgeTransport for F
where
    F: Fn(&str) -> Result<String, TransportError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        self(prompt)
    }
}

/// Chat-completion HTTP transport. Sends
/// `{"model", "messages": [{"role": "user", "content": prompt}], "temperature": 0}`
/// with a bearer token and reads `choices[0].message.content`.
pub struct HttpChatTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    model: String,
}

impl HttpChatTransport {
    pub fn new(endpoint: &str, api_key: &str, model: &str, timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Fatal(e.to_string()))?;
        Ok(HttpChatTransport {
            client,
            endpoint: endpoint.to_string(),
            api_key: api_key.to_string(),
            model: model.to_string(),
        })
    }
}

impl JudgeTransport for HttpChatTransport {
    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Transient(format!("http status {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Fatal(format!("http status {status}")));
        }
        let value: serde_json::Value = response
            .json()
            .map_err(|e| TransportError::Fatal(format!("invalid response body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TransportError::Fatal("response carries no message content".into()))
    }
}

#[derive(Debug, Clone)]
pub struct JudgeOptions {
    /// Maximum concurrent in-flight requests.
    pub max_in_flight: usize,
    /// Retries after the first attempt, on transient failures only.
    pub max_retries: u32,
    pub backoff_base: Duration,
    /// Judge only the first N items when set.
    pub first_n: Option<usize>,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        JudgeOptions {
            max_in_flight: 4,
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
            first_n: None,
        }
    }
}

/// One request/response exchange, kept for the audit log.
#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    pub index: usize,
    pub id: String,
    pub attempts: u32,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub unix_time_ms: u128,
}

pub struct JudgeClient<T: JudgeTransport> {
    transport: T,
    opts: JudgeOptions,
}

impl<T: JudgeTransport> JudgeClient<T> {
    pub fn new(transport: T, opts: JudgeOptions) -> Self {
        JudgeClient { transport, opts }
    }

    fn complete_with_retries(&self, id: &str, prompt: &str) -> (Result<String, TransportError>, u32) {
        let mut attempt: u32 = 0;
        loop {
            match self.transport.complete(prompt) {
                Ok(text) => return (Ok(text), attempt + 1),
                Err(TransportError::Fatal(e)) => return (Err(TransportError::Fatal(e)), attempt + 1),
                Err(TransportError::Transient(e)) => {
                    if attempt >= self.opts.max_retries {
                        return (Err(TransportError::Transient(e)), attempt + 1);
                    }
                    let base = self.opts.backoff_base.as_millis() as u64;
                    let jitter = det::fnv1a64(&format!("{id}:{attempt}")) % (base / 2 + 1);
                    std::thread::sleep(Duration::from_millis(base.saturating_mul(1 << attempt) + jitter));
                    attempt += 1;
                }
            }
        }
    }

    /// Render, send, and parse the correctness prompt for every item.
    ///
    /// At most `max_in_flight` requests run concurrently; verdicts come
    /// back in input order regardless of completion order. Audit entries
    /// are returned in input order as well.
    pub fn judge_correctness(&self, items: &[QAItem]) -> (Vec<JudgeVerdict>, Vec<AuditEntry>) {
        let limit = self.opts.first_n.unwrap_or(items.len()).min(items.len());
        let items = &items[..limit];
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<(JudgeVerdict, AuditEntry)>>> = Mutex::new(vec![None; limit]);
        let workers = self.opts.max_in_flight.max(1).min(limit.max(1));

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= limit {
                        break;
                    }
                    let item = &items[idx];
                    let prompt = render_correctness_prompt(item);
                    let (outcome, attempts) = self.complete_with_retries(&item.id, &prompt);
                    let (raw, correct, error) = match outcome {
                        Ok(text) => {
                            let parsed = parse_correctness(&text);
                            (text, parsed, None)
                        }
                        Err(e) => (String::new(), None, Some(e.to_string())),
                    };
                    let verdict = JudgeVerdict {
                        id: item.id.clone(),
                        kind: VerdictKind::CorrectnessYesNo,
                        correct,
                        score_a: None,
                        score_b: None,
                        raw_response: raw.clone(),
                    };
                    let audit = AuditEntry {
                        index: idx,
                        id: item.id.clone(),
                        attempts,
                        prompt,
                        response: if raw.is_empty() { None } else { Some(raw) },
                        error,
                        unix_time_ms: now_ms(),
                    };
                    slots.lock().unwrap()[idx] = Some((verdict, audit));
                });
            }
        });

        let mut verdicts = Vec::with_capacity(limit);
        let mut audits = Vec::with_capacity(limit);
        for slot in slots.into_inner().unwrap() {
            let (v, a) = slot.expect("every index was processed");
            verdicts.push(v);
            audits.push(a);
        }
        (verdicts, audits)
    }

    /// Render, send, and parse one pairwise comparison.
    pub fn judge_pairwise(
        &self,
        id: &str,
        question: &str,
        answer_a: &str,
        answer_b: &str,
    ) -> (JudgeVerdict, AuditEntry) {
        let prompt = render_pairwise_prompt(question, answer_a, answer_b);
        let (outcome, attempts) = self.complete_with_retries(id, &prompt);
        let (raw, scores, error) = match outcome {
            Ok(text) => {
                let parsed = parse_pairwise(&text);
                (text, parsed, None)
            }
            Err(e) => (String::new(), None, Some(e.to_string())),
        };
        let verdict = JudgeVerdict {
            id: id.to_string(),
            kind: VerdictKind::PairwiseScores,
            correct: None,
            score_a: scores.map(|(a, _)| a),
            score_b: scores.map(|(_, b)| b),
            raw_response: raw.clone(),
        };
        let audit = AuditEntry {
            index: 0,
            id: id.to_string(),
            attempts,
            prompt,
            response: if raw.is_empty() { None } else { Some(raw) },
            error,
            unix_time_ms: now_ms(),
        };
        (verdict, audit)
    }
}

fn now_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}
