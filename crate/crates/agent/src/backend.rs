//! Text-generation backends.

use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use mechsynth_core::dsl::{extract_block, parse, render_errors};
use mechsynth_core::linkage::MechanismSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self { temperature: 0.8, max_tokens: 1024, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("scripted transcript exhausted after {0} responses")]
    Exhausted(usize),
    #[error("scripted response {index} expected prompt hash {expected}, got {actual}")]
    PromptMismatch { index: usize, expected: String, actual: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

pub trait AgentBackend: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError>;
}

/// Lowercase hex SHA-256 of a prompt, as used in transcripts.
pub fn prompt_hash(prompt: &str) -> String {
    Sha256::digest(prompt.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// One transcript line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_prompt_hash: Option<String>,
    pub response_text: String,
}

impl ScriptedResponse {
    pub fn new(text: impl Into<String>) -> Self {
        Self { expected_prompt_hash: None, response_text: text.into() }
    }
}

/// Offline, deterministic playback of a transcript, one response per call.
#[derive(Debug)]
pub struct ScriptedBackend {
    name: String,
    responses: Vec<ScriptedResponse>,
    cycle: bool,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(name: impl Into<String>, responses: Vec<ScriptedResponse>) -> Self {
        Self { name: name.into(), responses, cycle: false, cursor: Mutex::new(0) }
    }

    /// Restart from the first response when the transcript runs out.
    pub fn cycling(mut self) -> Self {
        self.cycle = true;
        self
    }

    pub fn from_jsonl(name: impl Into<String>, text: &str) -> Result<Self, BackendError> {
        let responses = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| BackendError::Config(format!("transcript line {}: {e}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        if responses.is_empty() {
            return Err(BackendError::Config("transcript has no responses".into()));
        }
        Ok(Self::new(name, responses))
    }

    pub fn from_file(name: impl Into<String>, path: &Path) -> Result<Self, BackendError> {
        let text = fs::read_to_string(path).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(name, &text)
    }

    pub fn responses(&self) -> &[ScriptedResponse] {
        &self.responses
    }

    /// Responses served so far.
    pub fn position(&self) -> usize {
        *self.cursor.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl AgentBackend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, prompt: &str, _params: &GenerationParams) -> Result<String, BackendError> {
        let mut cursor = self.cursor.lock().unwrap_or_else(|e| e.into_inner());
        let n = self.responses.len();
        if n == 0 || (*cursor >= n && !self.cycle) {
            return Err(BackendError::Exhausted(*cursor));
        }
        let index = *cursor % n;
        let entry = &self.responses[index];
        if let Some(expected) = &entry.expected_prompt_hash {
            let actual = prompt_hash(prompt);
            if !expected.eq_ignore_ascii_case(&actual) {
                return Err(BackendError::PromptMismatch { index, expected: expected.clone(), actual });
            }
        }
        *cursor += 1;
        Ok(entry.response_text.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Full URL of the chat-completion endpoint.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token; unset means no auth header.
    pub token_env: Option<String>,
    pub system_prompt: Option<String>,
    pub timeout_secs: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            token_env: None,
            system_prompt: None,
            timeout_secs: 120,
        }
    }
}

/// Chat-completion client: posts `{model, messages, temperature, max_tokens}`
/// and returns the first choice's message content.
pub struct HttpChatBackend {
    name: String,
    config: HttpConfig,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatBackend {
    pub fn new(name: impl Into<String>, config: HttpConfig) -> Result<Self, BackendError> {
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| BackendError::Config(format!("environment variable {var} is not set")))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .into();
        Ok(Self { name: name.into(), config, token, agent })
    }
}

impl AgentBackend for HttpChatBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError> {
        let mut messages = Vec::new();
        if let Some(system) = &self.config.system_prompt {
            messages.push(serde_json::json!({"role": "system", "content": system}));
        }
        messages.push(serde_json::json!({"role": "user", "content": prompt}));
        let mut body = serde_json::json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        if let Some(seed) = params.seed {
            body["seed"] = seed.into();
        }
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| BackendError::Transport(e.to_string()))?;
        let value: serde_json::Value = resp.body_mut().read_json().map_err(|e| BackendError::Malformed(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Malformed("no choices[0].message.content".into()))
    }
}

/// One generated candidate and what became of it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCandidate {
    /// `None` when the backend failed after all retries.
    pub raw_text: Option<String>,
    pub spec: Option<MechanismSpec<f64>>,
    pub error: Option<String>,
}

/// Sub-seed for call `slot` derived from a base seed.
pub fn derive_seed(base: Option<u64>, salt: u64) -> Option<u64> {
    base.map(|s| {
        // splitmix64 finalizer
        let mut z = s ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// Calls the backend once, retrying transport failures up to `retries` times.
pub fn generate_with_retries(
    backend: &dyn AgentBackend,
    prompt: &str,
    params: &GenerationParams,
    retries: usize,
) -> Result<String, BackendError> {
    let mut last = None;
    for _ in 0..=retries {
        match backend.generate(prompt, params) {
            Ok(text) => return Ok(text),
            // Playback errors will not change on retry.
            Err(e @ (BackendError::Exhausted(_) | BackendError::PromptMismatch { .. } | BackendError::Config(_))) => {
                return Err(e)
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Extracts and parses mechanism code from a raw reply.
pub fn interpret_response(text: &str) -> Result<MechanismSpec<f64>, String> {
    let block = extract_block(text).ok_or_else(|| "no mechanism code found in the response".to_string())?;
    parse::<f64>(&block).map_err(|errs| render_errors(&errs))
}

/// Samples `b` independent candidates for one prompt.
pub fn generate_candidates(
    backend: &dyn AgentBackend,
    prompt: &str,
    b: usize,
    params: &GenerationParams,
    retries: usize,
) -> Vec<GeneratedCandidate> {
    (0..b)
        .map(|i| {
            let call = GenerationParams { seed: derive_seed(params.seed, i as u64), ..*params };
            match generate_with_retries(backend, prompt, &call, retries) {
                Ok(text) => {
                    let parsed = interpret_response(&text);
                    GeneratedCandidate { spec: parsed.as_ref().ok().cloned(), error: parsed.err(), raw_text: Some(text) }
                }
                Err(e) => GeneratedCandidate { raw_text: None, spec: None, error: Some(e.to_string()) },
            }
        })
        .collect()
}
