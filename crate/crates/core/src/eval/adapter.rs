//! Model endpoints. Scripted adapters read the off-wire [`ProbeTag`];
//! network adapters only see the chat messages.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::probe::{compute_ground_truth, Probe};
use crate::view::Observation;
use crate::world::World;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    pub temperature: f64,
    pub max_answer_tokens: u32,
    pub thinking_budget: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_effort: Option<String>,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_answer_tokens: 256,
            thinking_budget: 16_384,
            reasoning_effort: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub decoding: DecodingConfig,
}

impl ChatRequest {
    /// Rough token estimate: four characters per token.
    pub fn estimated_tokens(&self) -> usize {
        self.messages
            .iter()
            .map(|m| m.content.chars().count().div_ceil(4) + 4)
            .sum()
    }
}

/// Simulator context for the probe being asked. Never sent over the wire.
#[derive(Clone, Copy)]
pub struct ProbeTag<'a> {
    pub probe: &'a Probe,
    /// Worlds after each step so far, across segments, the current one last.
    pub worlds: &'a [World],
    /// Observations aligned with `worlds`.
    pub history: &'a [Observation],
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdapterError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited")]
    RateLimited,
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("request rejected {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("prompt of ~{tokens} tokens exceeds the {limit}-token context")]
    ContextOverflow { tokens: usize, limit: usize },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("scripted adapter failed: {0}")]
    Script(String),
}

impl AdapterError {
    pub fn retryable(&self) -> bool {
        matches!(
            self,
            Self::Transport(_) | Self::RateLimited | Self::Server { .. }
        )
    }
}

pub trait ModelAdapter: Send + Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, request: &ChatRequest, tag: &ProbeTag<'_>) -> Result<String, AdapterError>;

    /// Context window in tokens, when known.
    fn context_limit(&self) -> Option<usize> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            base_delay_ms: 0,
            max_delay_ms: 0,
        }
    }

    fn delay(&self, attempt: u32) -> Duration {
        let ms = self
            .base_delay_ms
            .saturating_mul(1 << attempt.min(16))
            .min(self.max_delay_ms);
        Duration::from_millis(ms)
    }
}

/// Outcome of a bounded retry loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub result: Result<String, AdapterError>,
    pub attempts: u32,
    pub latency_ms: u64,
}

/// Call the adapter, retrying retryable errors with exponential backoff.
/// Prompts over the adapter's context limit fail without a call.
pub fn complete_with_retry(
    adapter: &dyn ModelAdapter,
    request: &ChatRequest,
    tag: &ProbeTag<'_>,
    policy: &RetryPolicy,
) -> Completion {
    let start = Instant::now();
    if let Some(limit) = adapter.context_limit() {
        let tokens = request.estimated_tokens();
        if tokens > limit {
            return Completion {
                result: Err(AdapterError::ContextOverflow { tokens, limit }),
                attempts: 0,
                latency_ms: 0,
            };
        }
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        let result = adapter.complete(request, tag);
        match &result {
            Err(e) if e.retryable() && attempts < policy.max_attempts.max(1) => {
                std::thread::sleep(policy.delay(attempts - 1));
            }
            _ => {
                return Completion {
                    result,
                    attempts,
                    latency_ms: start.elapsed().as_millis() as u64,
                };
            }
        }
    }
}

/// Answers with the truth recomputed from the full simulator state.
#[derive(Clone, Debug, Default)]
pub struct OracleAdapter;

impl ModelAdapter for OracleAdapter {
    fn model_id(&self) -> &str {
        "scripted-oracle"
    }

    fn complete(&self, _: &ChatRequest, tag: &ProbeTag<'_>) -> Result<String, AdapterError> {
        let world = tag
            .worlds
            .last()
            .ok_or_else(|| AdapterError::Script("no world".into()))?;
        let truth = compute_ground_truth(tag.probe, world, tag.history)
            .map_err(|e| AdapterError::Script(e.to_string()))?;
        Ok(format!("ANSWER: {}", truth.render()))
    }
}

/// Answers as if the world were frozen `lag` steps ago.
#[derive(Clone, Debug)]
pub struct StaleAdapter {
    pub lag: usize,
    id: String,
}

impl StaleAdapter {
    pub fn new(lag: usize) -> Self {
        Self {
            lag,
            id: format!("scripted-stale-{lag}"),
        }
    }
}

impl ModelAdapter for StaleAdapter {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn complete(&self, _: &ChatRequest, tag: &ProbeTag<'_>) -> Result<String, AdapterError> {
        let n = tag.worlds.len();
        if n == 0 {
            return Err(AdapterError::Script("no world".into()));
        }
        let idx = n.saturating_sub(1 + self.lag);
        let truth = compute_ground_truth(tag.probe, &tag.worlds[idx], &tag.history[..=idx])
            .map_err(|e| AdapterError::Script(e.to_string()))?;
        Ok(format!("ANSWER: {}", truth.render()))
    }
}

/// Always returns the same text.
#[derive(Clone, Debug)]
pub struct FixedAdapter {
    pub reply: String,
}

impl ModelAdapter for FixedAdapter {
    fn model_id(&self) -> &str {
        "scripted-fixed"
    }

    fn complete(&self, _: &ChatRequest, _: &ProbeTag<'_>) -> Result<String, AdapterError> {
        Ok(self.reply.clone())
    }
}

/// Chat-completions endpoint speaking the common OpenAI-compatible JSON.
pub struct HttpAdapter {
    model: String,
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    min_interval: Duration,
    last_call: Mutex<Option<Instant>>,
    context_limit: Option<usize>,
}

pub const ENV_BASE_URL: &str = "GRIDPROBE_API_BASE";
pub const ENV_API_KEY: &str = "GRIDPROBE_API_KEY";
pub const ENV_MAX_RPS: &str = "GRIDPROBE_MAX_RPS";
pub const ENV_CONTEXT: &str = "GRIDPROBE_CONTEXT_TOKENS";

impl HttpAdapter {
    pub fn new(
        model: impl Into<String>,
        base_url: impl Into<String>,
        api_key: Option<String>,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            model: model.into(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            agent,
            min_interval: Duration::ZERO,
            last_call: Mutex::new(None),
            context_limit: None,
        }
    }

    /// Endpoint and credentials from `GRIDPROBE_API_BASE` (default the
    /// OpenAI API), `GRIDPROBE_API_KEY` or `OPENAI_API_KEY`,
    /// `GRIDPROBE_MAX_RPS` and `GRIDPROBE_CONTEXT_TOKENS`.
    pub fn from_env(model: impl Into<String>) -> Self {
        let base =
            std::env::var(ENV_BASE_URL).unwrap_or_else(|_| "https://api.openai.com/v1".into());
        let key = std::env::var(ENV_API_KEY)
            .or_else(|_| std::env::var("OPENAI_API_KEY"))
            .ok();
        let mut a = Self::new(model, base, key);
        if let Some(rps) = std::env::var(ENV_MAX_RPS)
            .ok()
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|r| *r > 0.0)
        {
            a.min_interval = Duration::from_secs_f64(1.0 / rps);
        }
        a.context_limit = std::env::var(ENV_CONTEXT).ok().and_then(|v| v.parse().ok());
        a
    }

    pub fn with_min_interval(mut self, d: Duration) -> Self {
        self.min_interval = d;
        self
    }

    pub fn with_context_limit(mut self, tokens: usize) -> Self {
        self.context_limit = Some(tokens);
        self
    }

    fn throttle(&self) {
        let mut last = self.last_call.lock().expect("throttle lock");
        if let Some(t) = *last {
            let wait = self.min_interval.saturating_sub(t.elapsed());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        *last = Some(Instant::now());
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        let d = &request.decoding;
        let mut body = json!({
            "model": self.model,
            "messages": request.messages,
            "temperature": d.temperature,
        });
        match &d.reasoning_effort {
            Some(effort) => {
                body["reasoning_effort"] = json!(effort);
                body["max_completion_tokens"] = json!(d.max_answer_tokens + d.thinking_budget);
            }
            None => body["max_tokens"] = json!(d.max_answer_tokens),
        }
        body
    }
}

impl ModelAdapter for HttpAdapter {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn context_limit(&self) -> Option<usize> {
        self.context_limit
    }

    fn complete(&self, request: &ChatRequest, _: &ProbeTag<'_>) -> Result<String, AdapterError> {
        self.throttle();
        let url = format!("{}/chat/completions", self.base_url);
        let mut req = self
            .agent
            .post(&url)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(self.request_body(request))
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        match status {
            200..=299 => {}
            429 => return Err(AdapterError::RateLimited),
            500..=599 => return Err(AdapterError::Server { status, body: text }),
            _ => return Err(AdapterError::Rejected { status, body: text }),
        }
        let v: Value =
            serde_json::from_str(&text).map_err(|e| AdapterError::Malformed(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| AdapterError::Malformed("no choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{Category, ConflictPolicy, GroundTruth, ProbeSpec};
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        fails: u32,
        calls: AtomicU32,
    }

    impl ModelAdapter for Flaky {
        fn model_id(&self) -> &str {
            "flaky"
        }
        fn complete(&self, _: &ChatRequest, _: &ProbeTag<'_>) -> Result<String, AdapterError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fails {
                Err(AdapterError::RateLimited)
            } else {
                Ok("ANSWER: yes".into())
            }
        }
    }

    fn probe() -> Probe {
        Probe {
            id: "p".into(),
            category: Category::P,
            answer_type: crate::probe::AnswerType::Presence,
            question: "?".into(),
            spec: ProbeSpec::Literal(GroundTruth::YesNo(true)),
            conflict_policy: ConflictPolicy::default(),
            segment: 0,
            step: 0,
        }
    }

    fn req() -> ChatRequest {
        ChatRequest {
            messages: vec![Message::user("hi")],
            decoding: DecodingConfig::default(),
        }
    }

    #[test]
    fn retries_are_bounded() {
        let p = probe();
        let tag = ProbeTag {
            probe: &p,
            worlds: &[],
            history: &[],
        };
        let ok = Flaky {
            fails: 2,
            calls: AtomicU32::new(0),
        };
        let c = complete_with_retry(&ok, &req(), &tag, &RetryPolicy::no_delay(3));
        assert_eq!((c.result.as_deref(), c.attempts), (Ok("ANSWER: yes"), 3));
        let bad = Flaky {
            fails: 10,
            calls: AtomicU32::new(0),
        };
        let c = complete_with_retry(&bad, &req(), &tag, &RetryPolicy::no_delay(3));
        assert_eq!((c.result, c.attempts), (Err(AdapterError::RateLimited), 3));
    }

    #[test]
    fn overflow_is_caught_before_calling() {
        let p = probe();
        let tag = ProbeTag {
            probe: &p,
            worlds: &[],
            history: &[],
        };
        let a = HttpAdapter::new("m", "http://127.0.0.1:9", None).with_context_limit(1);
        let c = complete_with_retry(&a, &req(), &tag, &RetryPolicy::no_delay(3));
        assert!(matches!(
            c.result,
            Err(AdapterError::ContextOverflow { .. })
        ));
        assert_eq!(c.attempts, 0);
    }

    #[test]
    fn decoding_defaults() {
        let d = DecodingConfig::default();
        assert_eq!(
            (d.temperature, d.max_answer_tokens, d.thinking_budget),
            (0.0, 256, 16_384)
        );
        let body = HttpAdapter::new("m", "http://x", None).request_body(&req());
        assert_eq!(body["max_tokens"], 256);
        assert_eq!(body["temperature"], 0.0);
    }
}
