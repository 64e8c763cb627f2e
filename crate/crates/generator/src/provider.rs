use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use async_trait::async_trait;
use emodial_core::{CefrLevel, Emotion};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::prompt::PromptSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Http,
    Mock,
}

/// Connection settings. The API key is referenced by environment variable
/// name and never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_parallel: usize,
    pub temperature: f64,
    /// Canned transcripts for the mock provider.
    pub mock_dir: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Http,
            endpoint: "https://api.openai.com/v1".to_string(),
            model: "gpt-3.5-turbo".to_string(),
            api_key_env: Some("OPENAI_API_KEY".to_string()),
            timeout_secs: 60.0,
            max_retries: 3,
            initial_backoff_ms: 500,
            max_parallel: 4,
            temperature: 0.7,
            mock_dir: None,
        }
    }
}

impl ProviderConfig {
    pub fn mock() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            api_key_env: None,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_parallel < 1 {
            return Err(ProviderError::Config("max_parallel must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ProviderError::Config("timeout_secs must be positive".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::Config("temperature must lie in [0, 2]".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("request timed out")]
    Timeout,
    #[error("authentication failed (HTTP {0})")]
    AuthFailure(u16),
    #[error("provider rejected the request (HTTP {0})")]
    Rejected(u16),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("environment variable `{0}` holding the API key is not set")]
    MissingApiKey(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
}

impl ProviderError {
    /// Worth retrying after a backoff.
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::ProviderUnavailable(_) | ProviderError::Timeout)
    }
}

#[async_trait]
pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Returns the assistant text for one user message.
    async fn complete(&self, prompt: &str, spec: &PromptSpec) -> Result<String, ProviderError>;
}

/// Chat-completion client for `<endpoint>/chat/completions`.
pub struct HttpProvider {
    client: reqwest::Client,
    url: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
}

impl fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpProvider")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpProvider {
    pub fn new(config: &ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ProviderError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(HttpProvider {
            client,
            url: format!("{}/chat/completions", config.endpoint.trim_end_matches('/')),
            model: config.model.clone(),
            temperature: config.temperature,
            api_key,
        })
    }
}

fn assistant_text(body: &str) -> Result<String, ProviderError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ProviderError::MalformedResponse(format!("not JSON: {e}")))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::MalformedResponse("no choices[0].message.content".into()))?;
    if text.trim().is_empty() {
        return Err(ProviderError::MalformedResponse("empty assistant text".into()));
    }
    Ok(text.to_string())
}

#[async_trait]
impl ChatProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.model
    }

    async fn complete(&self, prompt: &str, _spec: &PromptSpec) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        });
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::ProviderUnavailable(e.without_url().to_string())
            }
        })?;
        let status = resp.status();
        match status.as_u16() {
            401 | 403 => return Err(ProviderError::AuthFailure(status.as_u16())),
            408 | 429 => return Err(ProviderError::ProviderUnavailable(format!("HTTP {status}"))),
            _ if status.is_server_error() => return Err(ProviderError::ProviderUnavailable(format!("HTTP {status}"))),
            _ if !status.is_success() => return Err(ProviderError::Rejected(status.as_u16())),
            _ => {}
        }
        let text = resp.text().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::ProviderUnavailable(e.without_url().to_string())
            }
        })?;
        assistant_text(&text)
    }
}

/// Deterministic offline provider.
///
/// Looks up canned transcripts by cell, falling back to a built-in template
/// per emotion and level. The template states the emotion word in the first
/// Client line even for implicit specs, which gives the IED check something
/// to catch.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    canned: BTreeMap<String, String>,
    fallback: Option<String>,
}

/// File stem for a cell: `anger_a2`, or `anger_a2_implicit`.
pub fn cell_key(emotion: Emotion, cefr: CefrLevel, implicit: bool) -> String {
    let base = format!("{}_{}", emotion.as_str(), cefr.as_str().to_lowercase());
    if implicit {
        format!("{base}_implicit")
    } else {
        base
    }
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Canned text for one cell.
    pub fn with_cell(mut self, emotion: Emotion, cefr: CefrLevel, implicit: bool, text: impl Into<String>) -> Self {
        self.canned.insert(cell_key(emotion, cefr, implicit), text.into());
        self
    }

    /// Text returned for every cell without its own entry.
    pub fn with_fallback(mut self, text: impl Into<String>) -> Self {
        self.fallback = Some(text.into());
        self
    }

    /// Loads `<cell>.txt` files and an optional `default.txt`.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut mock = MockProvider::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_lowercase();
                let text = std::fs::read_to_string(&path)?;
                if stem == "default" {
                    mock.fallback = Some(text);
                } else {
                    mock.canned.insert(stem, text);
                }
            }
        }
        Ok(mock)
    }

    fn lookup(&self, spec: &PromptSpec) -> String {
        let exact = cell_key(spec.target_emotion, spec.cefr, spec.implicit);
        let explicit = cell_key(spec.target_emotion, spec.cefr, false);
        self.canned
            .get(&exact)
            .or_else(|| self.canned.get(&explicit))
            .or(self.fallback.as_ref())
            .cloned()
            .unwrap_or_else(|| template(spec.target_emotion, spec.cefr))
    }
}

#[async_trait]
impl ChatProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    async fn complete(&self, _prompt: &str, spec: &PromptSpec) -> Result<String, ProviderError> {
        Ok(self.lookup(spec))
    }
}

fn adjective(e: Emotion) -> &'static str {
    match e {
        Emotion::Joy => "happy",
        Emotion::Sadness => "sad",
        Emotion::Anger => "angry",
        Emotion::Fear => "afraid",
        Emotion::Surprise => "surprised",
        Emotion::Disgust => "disgusted",
    }
}

const A2_TEMPLATE: &str = "\
Client ({adj}): Hello. I am {adj}. My phone does not work.
Agent (calm): I am sorry. What is the problem?
Client ({adj}): It does not turn on. I need it for work.
Agent (helpful): Did you charge it?
Client ({adj}): Yes. It is still dead.
Agent (reassuring): A man can come today. Is that good for you?
Client ({adj}): Yes. After five is fine.
Agent (polite): Thank you. We will see you then.
";

const B2_TEMPLATE: &str = "\
Client ({adj}): Good afternoon. I'm calling because I feel {adj} about the way my phone has been behaving lately.
Agent (attentive): I'm sorry to hear that. Could you explain what exactly is going on with the device?
Client ({adj}): It keeps restarting during important calls, and I depend on it for my job every single day.
Agent (understanding): That sounds inconvenient. Have you already tried updating the software or resetting the settings?
Client ({adj}): I tried both suggestions yesterday, but unfortunately nothing changed at all.
Agent (reassuring): In that case, I can arrange for a technician to inspect the phone tomorrow morning.
Client ({adj}): That would be acceptable, as long as the problem is finally solved.
Agent (polite): Certainly. You will receive a confirmation message within the next hour.
";

const C2_TEMPLATE: &str = "\
Client ({adj}): Good afternoon. I am contacting your organization because I am genuinely {adj} regarding the persistent malfunctioning of my telephone, which has considerably disrupted my professional responsibilities.
Agent (attentive): I sincerely apologize for the inconvenience. Could you elaborate on the particular symptoms you have observed, including any irregular behaviour?
Client ({adj}): Unquestionably. The device spontaneously deactivates during conversations, and conventional troubleshooting procedures, including a comprehensive factory restoration, have proved entirely ineffective.
Agent (understanding): That is thoroughly unsatisfactory. Considering the circumstances, I would recommend an immediate technical examination conducted by an authorized specialist.
Client ({adj}): Provided that the examination is scheduled expeditiously, that arrangement is satisfactory, although my confidence in your organization has diminished considerably.
Agent (apologetic): Understandably so. I will personally guarantee prioritized scheduling and continuous communication regarding the technician's availability.
";

/// Built-in transcript for one emotion and level.
pub fn template(e: Emotion, cefr: CefrLevel) -> String {
    let t = match cefr {
        CefrLevel::A2 => A2_TEMPLATE,
        CefrLevel::B2 => B2_TEMPLATE,
        CefrLevel::C2 => C2_TEMPLATE,
    };
    t.replace("{adj}", adjective(e))
}
