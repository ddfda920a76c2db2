//! Uniform chat-agent contract shared by players and the judge.
//!
//! Two implementations: a blocking OpenAI-compatible HTTP client, and a
//! deterministic scripted agent for tests and reproducible runs.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::AgentError;

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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Remote,
    Scripted,
}

/// Deterministic playback for the scripted agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    /// Responses consumed in call order; exhaustion is an error so tests
    /// fail loudly.
    Sequence(Vec<String>),
    /// `(key, response)` pairs; the first key contained in the latest user
    /// message wins, independent of call order. Not consumed.
    Keyed(Vec<(String, String)>),
}

/// How to reach one model, plus its sampling and retry settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentBinding {
    pub agent_id: String,
    pub kind: AgentKind,
    pub model_name: String,
    /// Full chat-completions URL for remote agents.
    #[serde(default)]
    pub endpoint: String,
    /// Environment variable holding the API key, if the endpoint needs one.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: u32,
    #[serde(default = "default_true")]
    pub supports_system_role: bool,
    #[serde(default)]
    pub retry_limit: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Playback for `kind = scripted`.
    #[serde(default)]
    pub script: Option<Script>,
}

fn default_true() -> bool {
    true
}

fn default_timeout() -> u64 {
    120
}

fn default_temperature() -> f64 {
    0.9
}

fn default_max_new_tokens() -> u32 {
    256
}

impl AgentBinding {
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if !(0.0..=2.0).contains(&self.temperature) {
            violations.push(format!(
                "agent '{}': temperature {} outside [0, 2]",
                self.agent_id, self.temperature
            ));
        }
        match self.kind {
            AgentKind::Remote if self.endpoint.is_empty() => {
                violations.push(format!("agent '{}': remote agent needs an endpoint", self.agent_id));
            }
            AgentKind::Scripted if self.script.is_none() => {
                violations.push(format!("agent '{}': scripted agent needs a script", self.agent_id));
            }
            _ => {}
        }
        if let Some(Script::Sequence(s)) = &self.script {
            if s.is_empty() {
                violations.push(format!("agent '{}': script must be non-empty", self.agent_id));
            }
        }
        if let Some(Script::Keyed(k)) = &self.script {
            if k.is_empty() {
                violations.push(format!("agent '{}': script must be non-empty", self.agent_id));
            }
        }
        violations
    }
}

/// A chat model that turns a message list into one assistant response.
///
/// Implementations must tolerate concurrent `complete` calls; the engine
/// fans a phase out across players.
pub trait ChatAgent: Send + Sync {
    fn agent_id(&self) -> &str;
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, AgentError>;
}

/// Reject message lists the wire protocol cannot express.
pub fn validate_messages(messages: &[ChatMessage]) -> Result<(), AgentError> {
    if messages.is_empty() {
        return Err(AgentError::EmptyMessages);
    }
    if messages[0].role == Role::Assistant {
        return Err(AgentError::BadLeadingRole);
    }
    for pair in messages.windows(2) {
        if pair[0].role == pair[1].role {
            return Err(AgentError::BadLeadingRole);
        }
    }
    if messages.iter().any(|m| m.content.is_empty()) {
        return Err(AgentError::EmptyContent);
    }
    Ok(())
}

/// The messages actually sent: for models without a system role, the system
/// prompt is folded onto the front of the first user message.
pub fn assemble_wire_messages(
    supports_system_role: bool,
    messages: &[ChatMessage],
) -> Vec<ChatMessage> {
    if supports_system_role || messages[0].role != Role::System {
        return messages.to_vec();
    }
    let system = &messages[0];
    let mut out = Vec::with_capacity(messages.len() - 1);
    let mut folded = false;
    for msg in &messages[1..] {
        if !folded && msg.role == Role::User {
            out.push(ChatMessage::user(format!("{}\n{}", system.content, msg.content)));
            folded = true;
        } else {
            out.push(msg.clone());
        }
    }
    if !folded {
        // No user message to fold into; demote the system prompt itself.
        out.insert(0, ChatMessage::user(system.content.clone()));
    }
    out
}

/// Blocking OpenAI-compatible chat-completions client with retries and
/// exponential backoff.
pub struct HttpAgent {
    binding: AgentBinding,
    client: reqwest::blocking::Client,
    backoff_base: Duration,
}

impl HttpAgent {
    pub fn new(binding: AgentBinding) -> Result<Self, AgentError> {
        Self::with_backoff(binding, Duration::from_millis(250))
    }

    /// Same as [`HttpAgent::new`] with a custom backoff base (tests).
    pub fn with_backoff(binding: AgentBinding, backoff_base: Duration) -> Result<Self, AgentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(binding.timeout_secs))
            .build()
            .map_err(|e| AgentError::Transport {
                agent: binding.agent_id.clone(),
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(Self {
            binding,
            client,
            backoff_base,
        })
    }

    fn api_key(&self) -> Result<Option<String>, AgentError> {
        match &self.binding.api_key_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(key) => Ok(Some(key)),
                Err(_) => Err(AgentError::MissingApiKey {
                    agent: self.binding.agent_id.clone(),
                    var: var.clone(),
                }),
            },
        }
    }

    fn post_once(&self, body: &serde_json::Value, key: Option<&str>) -> Result<String, AgentError> {
        let mut request = self.client.post(&self.binding.endpoint).json(body);
        if let Some(key) = key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| AgentError::Transport {
            agent: self.binding.agent_id.clone(),
            attempts: 1,
            detail: e.to_string(),
        })?;

        let status = response.status();
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(AgentError::Http {
                agent: self.binding.agent_id.clone(),
                status: status.as_u16(),
                body,
            });
        }

        let payload: serde_json::Value =
            response.json().map_err(|e| AgentError::Transport {
                agent: self.binding.agent_id.clone(),
                attempts: 1,
                detail: format!("invalid JSON response: {e}"),
            })?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| AgentError::MissingContent(self.binding.agent_id.clone()))
    }
}

impl ChatAgent for HttpAgent {
    fn agent_id(&self) -> &str {
        &self.binding.agent_id
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, AgentError> {
        validate_messages(messages)?;
        let key = self.api_key()?;
        let wire = assemble_wire_messages(self.binding.supports_system_role, messages);
        let body = json!({
            "model": self.binding.model_name,
            "messages": wire,
            "temperature": self.binding.temperature,
            "max_tokens": self.binding.max_new_tokens,
        });

        let attempts = self.binding.retry_limit + 1;
        let mut last_err = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
            match self.post_once(&body, key.as_deref()) {
                Ok(content) => return Ok(content),
                Err(err) => {
                    // Client-side rejections won't improve on retry.
                    let fatal = matches!(&err, AgentError::Http { status, .. }
                        if (400..500).contains(status) && *status != 429);
                    if fatal {
                        return Err(err);
                    }
                    log::warn!(
                        "agent '{}' attempt {}/{} failed: {err}",
                        self.binding.agent_id,
                        attempt + 1,
                        attempts
                    );
                    last_err = Some(err);
                }
            }
        }
        match last_err.unwrap() {
            AgentError::Transport { agent, detail, .. } => Err(AgentError::Transport {
                agent,
                attempts,
                detail,
            }),
            other => Err(other),
        }
    }
}

/// Deterministic agent replaying a [`Script`]. Serializes calls internally.
pub struct ScriptedAgent {
    id: String,
    script: Script,
    cursor: Mutex<usize>,
}

impl ScriptedAgent {
    pub fn new(id: impl Into<String>, script: Script) -> Self {
        Self {
            id: id.into(),
            script,
            cursor: Mutex::new(0),
        }
    }

    pub fn sequence<S: Into<String>>(id: impl Into<String>, responses: Vec<S>) -> Self {
        Self::new(
            id,
            Script::Sequence(responses.into_iter().map(Into::into).collect()),
        )
    }

    pub fn keyed<K: Into<String>, V: Into<String>>(
        id: impl Into<String>,
        pairs: Vec<(K, V)>,
    ) -> Self {
        Self::new(
            id,
            Script::Keyed(pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()),
        )
    }

    /// Agent that answers every call with the same response.
    pub fn constant(id: impl Into<String>, response: impl Into<String>) -> Self {
        Self::keyed(id, vec![(String::new(), response.into())])
    }

    /// Calls served so far (sequence scripts only advance the counter).
    pub fn calls_made(&self) -> usize {
        *self.cursor.lock().unwrap()
    }
}

impl ChatAgent for ScriptedAgent {
    fn agent_id(&self) -> &str {
        &self.id
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, AgentError> {
        validate_messages(messages)?;
        let mut cursor = self.cursor.lock().unwrap();
        match &self.script {
            Script::Sequence(responses) => {
                let response = responses
                    .get(*cursor)
                    .ok_or_else(|| AgentError::ScriptExhausted(self.id.clone(), responses.len()))?;
                *cursor += 1;
                Ok(response.clone())
            }
            Script::Keyed(pairs) => {
                *cursor += 1;
                let prompt = messages
                    .iter()
                    .rev()
                    .find(|m| m.role == Role::User)
                    .map(|m| m.content.as_str())
                    .unwrap_or_default();
                pairs
                    .iter()
                    .find(|(key, _)| prompt.contains(key.as_str()))
                    .map(|(_, response)| response.clone())
                    .ok_or_else(|| AgentError::NoScriptMatch(self.id.clone()))
            }
        }
    }
}

/// Instantiate the agent a binding describes.
pub fn build_agent(binding: &AgentBinding) -> Result<Box<dyn ChatAgent>, AgentError> {
    match binding.kind {
        AgentKind::Remote => Ok(Box::new(HttpAgent::new(binding.clone())?)),
        AgentKind::Scripted => {
            let script = binding.script.clone().ok_or_else(|| {
                AgentError::NoScriptMatch(binding.agent_id.clone())
            })?;
            Ok(Box::new(ScriptedAgent::new(binding.agent_id.clone(), script)))
        }
    }
}
