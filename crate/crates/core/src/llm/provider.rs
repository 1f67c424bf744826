use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("environment variable {0} holding the API key is not set")]
    MissingKey(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    Response(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
    /// Failure injected by a scripted provider.
    #[error("scripted failure: {0}")]
    Scripted(String),
}

impl ProviderError {
    fn retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// One chat-completion call: messages in, assistant text out.
/// Implementations are shared across sessions and threads.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError>;

    /// Display name used in benchmark records.
    fn name(&self) -> String;
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        (**self).complete(messages)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    OpenAi,
    Anthropic,
    Gemini,
    /// Replays canned responses from `mock_script`.
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Full request URL; empty selects the vendor default.
    #[serde(default)]
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the key. The key itself is
    /// never stored.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub mock_script: Option<PathBuf>,
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    2
}

impl ProviderConfig {
    pub fn new(kind: ProviderKind, model: impl Into<String>) -> Self {
        ProviderConfig {
            kind,
            endpoint: String::new(),
            model: model.into(),
            api_key_env: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            mock_script: None,
        }
    }

    pub fn mock(script: impl Into<PathBuf>) -> Self {
        ProviderConfig { mock_script: Some(script.into()), ..Self::new(ProviderKind::Mock, "mock") }
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        if self.timeout_secs == 0 {
            return Err(ProviderError::Config("timeout must be positive".into()));
        }
        if self.model.trim().is_empty() {
            return Err(ProviderError::Config("model name is empty".into()));
        }
        if self.kind == ProviderKind::Mock && self.mock_script.is_none() {
            return Err(ProviderError::Config("mock provider needs a script file".into()));
        }
        Ok(())
    }

    fn key_env(&self) -> String {
        self.api_key_env.clone().unwrap_or_else(|| {
            match self.kind {
                ProviderKind::OpenAi => "OPENAI_API_KEY",
                ProviderKind::Anthropic => "ANTHROPIC_API_KEY",
                ProviderKind::Gemini => "GEMINI_API_KEY",
                ProviderKind::Mock => "",
            }
            .to_string()
        })
    }

    pub fn url(&self) -> String {
        if !self.endpoint.is_empty() {
            return self.endpoint.clone();
        }
        match self.kind {
            ProviderKind::OpenAi => "https://api.openai.com/v1/chat/completions".into(),
            ProviderKind::Anthropic => "https://api.anthropic.com/v1/messages".into(),
            ProviderKind::Gemini => format!(
                "https://generativelanguage.googleapis.com/v1beta/models/{}:generateContent",
                self.model
            ),
            ProviderKind::Mock => String::new(),
        }
    }
}

/// Builds the provider described by `cfg`.
pub fn build_provider(cfg: &ProviderConfig) -> Result<Box<dyn ChatProvider>, ProviderError> {
    cfg.check()?;
    match cfg.kind {
        ProviderKind::Mock => {
            let path = cfg.mock_script.as_ref().expect("checked above");
            let doc = std::fs::read_to_string(path)
                .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
            Ok(Box::new(ScriptedProvider::from_json(&doc)?.named(&cfg.model)))
        }
        _ => Ok(Box::new(HttpProvider::new(cfg.clone()))),
    }
}

/// Chat-completion adapter for the supported HTTP vendors.
pub struct HttpProvider {
    cfg: ProviderConfig,
    agent: ureq::Agent,
    /// Key supplied with a request; held in memory only.
    key: Option<String>,
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider { cfg, agent, key: None }
    }

    /// Uses `key` instead of reading the configured environment variable.
    pub fn with_key(cfg: ProviderConfig, key: String) -> Self {
        HttpProvider { key: Some(key), ..Self::new(cfg) }
    }

    fn send_once(&self, key: &str, body: &Value) -> Result<String, ProviderError> {
        let mut req = self.agent.post(&self.cfg.url()).header("content-type", "application/json");
        req = match self.cfg.kind {
            ProviderKind::OpenAi => req.header("authorization", &format!("Bearer {key}")),
            ProviderKind::Anthropic => req.header("x-api-key", key).header("anthropic-version", "2023-06-01"),
            ProviderKind::Gemini => req.header("x-goog-api-key", key),
            ProviderKind::Mock => unreachable!("mock is not an HTTP provider"),
        };
        let mut resp = req.send_json(body).map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, body: text.chars().take(500).collect() });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| ProviderError::Response(e.to_string()))?;
        parse_response(self.cfg.kind, &v)
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        let key = match &self.key {
            Some(k) => k.clone(),
            None => {
                let env = self.cfg.key_env();
                std::env::var(&env).map_err(|_| ProviderError::MissingKey(env))?
            }
        };
        let body = request_body(self.cfg.kind, &self.cfg.model, messages);
        let mut attempt = 0;
        loop {
            match self.send_once(&key, &body) {
                Err(e) if e.retryable() && attempt < self.cfg.max_retries => {
                    attempt += 1;
                    log::warn!("{}: {e}; retry {attempt}/{}", self.name(), self.cfg.max_retries);
                    std::thread::sleep(Duration::from_millis(500 << attempt.min(5)));
                }
                r => return r,
            }
        }
    }

    fn name(&self) -> String {
        self.cfg.model.clone()
    }
}

/// Vendor-specific JSON request body.
pub fn request_body(kind: ProviderKind, model: &str, messages: &[ChatMessage]) -> Value {
    let system: Vec<&str> =
        messages.iter().filter(|m| m.role == Role::System).map(|m| m.content.as_str()).collect();
    let turns = messages.iter().filter(|m| m.role != Role::System);
    match kind {
        ProviderKind::OpenAi | ProviderKind::Mock => json!({
            "model": model,
            "messages": messages.iter().map(|m| json!({"role": m.role, "content": m.content})).collect::<Vec<_>>(),
        }),
        ProviderKind::Anthropic => {
            let mut body = json!({
                "model": model,
                "max_tokens": 8192,
                "messages": turns.map(|m| json!({"role": m.role, "content": m.content})).collect::<Vec<_>>(),
            });
            if !system.is_empty() {
                body["system"] = json!(system.join("\n\n"));
            }
            body
        }
        ProviderKind::Gemini => {
            let contents: Vec<Value> = turns
                .map(|m| {
                    let role = if m.role == Role::Assistant { "model" } else { "user" };
                    json!({"role": role, "parts": [{"text": m.content}]})
                })
                .collect();
            let mut body = json!({ "contents": contents });
            if !system.is_empty() {
                body["systemInstruction"] = json!({"parts": [{"text": system.join("\n\n")}]});
            }
            body
        }
    }
}

/// Extracts the assistant text from a vendor response.
pub fn parse_response(kind: ProviderKind, v: &Value) -> Result<String, ProviderError> {
    let missing = || ProviderError::Response(format!("no text in response: {}", truncate(&v.to_string())));
    let text = match kind {
        ProviderKind::OpenAi | ProviderKind::Mock => {
            v["choices"][0]["message"]["content"].as_str().map(str::to_string)
        }
        ProviderKind::Anthropic => v["content"].as_array().map(|parts| {
            parts.iter().filter(|p| p["type"] == "text").filter_map(|p| p["text"].as_str()).collect()
        }),
        ProviderKind::Gemini => v["candidates"][0]["content"]["parts"]
            .as_array()
            .map(|parts| parts.iter().filter_map(|p| p["text"].as_str()).collect()),
    };
    text.filter(|t: &String| !t.is_empty()).ok_or_else(missing)
}

fn truncate(s: &str) -> String {
    s.chars().take(300).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Text(String),
    Error { error: String },
}

/// Replays a fixed list of replies in order, repeating the last one once the
/// list is exhausted, and records every request it receives.
pub struct ScriptedProvider {
    name: String,
    replies: Vec<ScriptedReply>,
    state: Mutex<ScriptState>,
}

#[derive(Default)]
struct ScriptState {
    next: usize,
    requests: Vec<Vec<ChatMessage>>,
}

impl ScriptedProvider {
    pub fn new(replies: Vec<ScriptedReply>) -> Self {
        ScriptedProvider { name: "mock".into(), replies, state: Mutex::default() }
    }

    pub fn texts<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|s| ScriptedReply::Text(s.into())).collect())
    }

    /// Parses a JSON array whose entries are reply strings or
    /// `{"error": "..."}` objects.
    pub fn from_json(doc: &str) -> Result<Self, ProviderError> {
        let replies: Vec<ScriptedReply> =
            serde_json::from_str(doc).map_err(|e| ProviderError::Config(format!("mock script: {e}")))?;
        if replies.is_empty() {
            return Err(ProviderError::Config("mock script is empty".into()));
        }
        Ok(Self::new(replies))
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Every conversation sent so far, in call order.
    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.state.lock().expect("mock state poisoned").requests.clone()
    }

    pub fn calls(&self) -> usize {
        self.state.lock().expect("mock state poisoned").requests.len()
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        let mut st = self.state.lock().expect("mock state poisoned");
        st.requests.push(messages.to_vec());
        let Some(last) = self.replies.len().checked_sub(1) else {
            return Err(ProviderError::Scripted("no replies scripted".into()));
        };
        let reply = &self.replies[st.next.min(last)];
        st.next += 1;
        match reply {
            ScriptedReply::Text(t) => Ok(t.clone()),
            ScriptedReply::Error { error } => Err(ProviderError::Scripted(error.clone())),
        }
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Provider backed by a closure; used for echo and scoring mocks.
pub struct FnProvider<F> {
    name: String,
    f: F,
}

impl<F> FnProvider<F>
where
    F: Fn(&[ChatMessage]) -> Result<String, ProviderError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnProvider { name: name.into(), f }
    }
}

impl<F> ChatProvider for FnProvider<F>
where
    F: Fn(&[ChatMessage]) -> Result<String, ProviderError> + Send + Sync,
{
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        (self.f)(messages)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn convo() -> Vec<ChatMessage> {
        vec![ChatMessage::system("be brief"), ChatMessage::user("hi"), ChatMessage::assistant("yo"), ChatMessage::user("again")]
    }

    #[test]
    fn openai_body_keeps_roles() {
        let b = request_body(ProviderKind::OpenAi, "gpt-x", &convo());
        assert_eq!(b["messages"][0], json!({"role": "system", "content": "be brief"}));
        assert_eq!(b["messages"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn anthropic_body_lifts_system() {
        let b = request_body(ProviderKind::Anthropic, "claude-x", &convo());
        assert_eq!(b["system"], "be brief");
        assert_eq!(b["messages"].as_array().unwrap().len(), 3);
        assert_eq!(b["messages"][1]["role"], "assistant");
    }

    #[test]
    fn gemini_body_uses_model_role() {
        let b = request_body(ProviderKind::Gemini, "gemini-x", &convo());
        assert_eq!(b["systemInstruction"]["parts"][0]["text"], "be brief");
        assert_eq!(b["contents"][1]["role"], "model");
    }

    #[test]
    fn parses_vendor_responses() {
        let oa = json!({"choices": [{"message": {"role": "assistant", "content": "A"}}]});
        assert_eq!(parse_response(ProviderKind::OpenAi, &oa).unwrap(), "A");
        let an = json!({"content": [{"type": "text", "text": "B"}, {"type": "text", "text": "C"}]});
        assert_eq!(parse_response(ProviderKind::Anthropic, &an).unwrap(), "BC");
        let ge = json!({"candidates": [{"content": {"parts": [{"text": "D"}]}}]});
        assert_eq!(parse_response(ProviderKind::Gemini, &ge).unwrap(), "D");
        assert!(parse_response(ProviderKind::OpenAi, &json!({})).is_err());
    }

    #[test]
    fn scripted_repeats_last_and_records() {
        let p = ScriptedProvider::from_json(r#"["one", {"error": "down"}, "two"]"#).unwrap();
        let m = [ChatMessage::user("q")];
        assert_eq!(p.complete(&m).unwrap(), "one");
        assert_eq!(p.complete(&m), Err(ProviderError::Scripted("down".into())));
        assert_eq!(p.complete(&m).unwrap(), "two");
        assert_eq!(p.complete(&m).unwrap(), "two");
        assert_eq!(p.calls(), 4);
        assert!(ScriptedProvider::from_json("[]").is_err());
    }

    #[test]
    fn missing_key_is_reported_without_network() {
        let mut cfg = ProviderConfig::new(ProviderKind::OpenAi, "m");
        cfg.api_key_env = Some("POWLGEN_TEST_UNSET_KEY".into());
        let p = HttpProvider::new(cfg);
        assert_eq!(
            p.complete(&[ChatMessage::user("x")]),
            Err(ProviderError::MissingKey("POWLGEN_TEST_UNSET_KEY".into()))
        );
    }

    #[test]
    fn config_checks() {
        let mut cfg = ProviderConfig::new(ProviderKind::Gemini, "g");
        assert!(cfg.url().ends_with("models/g:generateContent"));
        cfg.timeout_secs = 0;
        assert!(cfg.check().is_err());
        assert!(ProviderConfig::new(ProviderKind::Mock, "m").check().is_err());
    }
}
