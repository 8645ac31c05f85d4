use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{ChatRole, ChatTranscript, PromptKind};

/// Extra attempts after a failed request.
pub const HTTP_RETRIES: usize = 2;
pub const DEFAULT_API_KEY_ENV: &str = "OPFORGE_API_KEY";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("mock fixture for {0} prompts is exhausted")]
    Exhausted(PromptKind),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("mock fixture: {0}")]
    Fixture(String),
}

pub trait ChatBackend: Send + Sync {
    fn id(&self) -> &str;
    fn temperature(&self) -> f64;
    /// Returns the model's reply to the transcript.
    fn send(&self, transcript: &ChatTranscript) -> Result<String, BackendError>;
}

/// Sends the transcript and appends the reply as an assistant message.
pub fn complete(transcript: &mut ChatTranscript, backend: &dyn ChatBackend) -> Result<String, BackendError> {
    transcript.backend_id = Some(backend.id().to_string());
    transcript.temperature = Some(backend.temperature());
    let reply = backend.send(transcript)?;
    if !reply.is_empty() {
        transcript
            .push(ChatRole::Assistant, reply.clone())
            .expect("assistant message after a prompt");
    }
    Ok(reply)
}

/// Scripted responses keyed by prompt kind, consumed in order.
#[derive(Debug)]
pub struct MockBackend {
    id: String,
    temperature: f64,
    scripts: HashMap<PromptKind, Vec<String>>,
    cursors: Mutex<HashMap<PromptKind, usize>>,
    received: Mutex<Vec<ChatTranscript>>,
}

impl MockBackend {
    pub fn new(scripts: HashMap<PromptKind, Vec<String>>) -> Self {
        MockBackend {
            id: "mock".to_string(),
            temperature: 0.5,
            scripts,
            cursors: Mutex::new(HashMap::new()),
            received: Mutex::new(Vec::new()),
        }
    }

    /// Loads one subdirectory per prompt kind; files are read in
    /// lexicographic order and each file is one response.
    pub fn from_dir(dir: &Path) -> Result<Self, BackendError> {
        if !dir.is_dir() {
            return Err(BackendError::Fixture(format!("{} is not a directory", dir.display())));
        }
        let mut scripts = HashMap::new();
        for kind in PromptKind::ALL {
            let sub = dir.join(kind.dir_name());
            if !sub.is_dir() {
                continue;
            }
            let mut files: Vec<_> = std::fs::read_dir(&sub)
                .map_err(|e| BackendError::Fixture(format!("{}: {e}", sub.display())))?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
                .collect();
            files.sort();
            let responses = files
                .iter()
                .map(|p| std::fs::read_to_string(p).map_err(|e| BackendError::Fixture(format!("{}: {e}", p.display()))))
                .collect::<Result<Vec<_>, _>>()?;
            scripts.insert(kind, responses);
        }
        Ok(MockBackend::new(scripts))
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// Responses handed out so far for `kind`.
    pub fn calls(&self, kind: PromptKind) -> usize {
        self.cursors.lock().expect("cursor lock").get(&kind).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> usize {
        self.cursors.lock().expect("cursor lock").values().sum()
    }

    /// Every transcript sent so far, including those left unanswered.
    pub fn received(&self) -> Vec<ChatTranscript> {
        self.received.lock().expect("log lock").clone()
    }

    pub fn remaining(&self, kind: PromptKind) -> usize {
        let total = self.scripts.get(&kind).map_or(0, Vec::len);
        total - self.calls(kind)
    }
}

impl ChatBackend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn send(&self, transcript: &ChatTranscript) -> Result<String, BackendError> {
        self.received.lock().expect("log lock").push(transcript.clone());
        let mut cursors = self.cursors.lock().expect("cursor lock");
        let cursor = cursors.entry(transcript.kind).or_insert(0);
        let script = self.scripts.get(&transcript.kind).map(Vec::as_slice).unwrap_or(&[]);
        let reply = script.get(*cursor).ok_or(BackendError::Exhausted(transcript.kind))?;
        *cursor += 1;
        Ok(reply.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpBackendConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model: "gpt-4-1106-preview".to_string(),
            temperature: 0.5,
            timeout_secs: 120,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
        }
    }
}

/// Client for the common JSON chat-completions HTTP protocol.
pub struct OpenAiCompatibleBackend {
    config: HttpBackendConfig,
    api_key: String,
    agent: ureq::Agent,
    id: String,
    gate: Mutex<()>,
    retry_delay: Duration,
}

impl OpenAiCompatibleBackend {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let key = std::env::var(&config.api_key_env).map_err(|_| BackendError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::with_key(config, key))
    }

    pub fn with_key(config: HttpBackendConfig, api_key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        OpenAiCompatibleBackend {
            id: format!("http:{}", config.model),
            config,
            api_key,
            agent,
            gate: Mutex::new(()),
            retry_delay: Duration::from_millis(500),
        }
    }

    pub fn with_retry_delay(mut self, delay: Duration) -> Self {
        self.retry_delay = delay;
        self
    }

    fn request_body(&self, transcript: &ChatTranscript) -> Value {
        let messages: Vec<Value> = transcript
            .messages()
            .iter()
            .map(|m| {
                let role = match m.role {
                    ChatRole::System => "system",
                    ChatRole::User => "user",
                    ChatRole::Assistant => "assistant",
                };
                json!({ "role": role, "content": m.content })
            })
            .collect();
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let mut response = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("http status {status}")));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(BackendError::Http { status, body: text }));
        }
        let parsed: Value = serde_json::from_str(&text).map_err(|e| Attempt::Fatal(BackendError::MalformedResponse(e.to_string())))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Attempt::Fatal(BackendError::MalformedResponse("missing choices[0].message.content".into())))
    }
}

enum Attempt {
    Retry(String),
    Fatal(BackendError),
}

impl ChatBackend for OpenAiCompatibleBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn temperature(&self) -> f64 {
        self.config.temperature
    }

    fn send(&self, transcript: &ChatTranscript) -> Result<String, BackendError> {
        let _serial = self.gate.lock().expect("request gate");
        let body = self.request_body(transcript);
        let mut last = String::new();
        for attempt in 0..=HTTP_RETRIES {
            if attempt > 0 {
                log::warn!("retrying chat request ({attempt}/{HTTP_RETRIES}): {last}");
                std::thread::sleep(self.retry_delay);
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => last = msg,
            }
        }
        Err(BackendError::Transport {
            attempts: HTTP_RETRIES + 1,
            message: last,
        })
    }
}
