//! Chat-completions adapter with function calling.
//!
//! Request: `{"model", "messages", "tools", "tool_choice", "temperature"?}`.
//! Messages map role for role; assistant tool calls become
//! `{"id", "type": "function", "function": {"name", "arguments": "<json>"}}`
//! and tool messages carry `tool_call_id`. The directive maps to
//! `"auto"`, `"none"` or `{"type": "function", "function": {"name": ...}}`.
//!
//! Response: `choices[0].message`; a non-empty `tool_calls` list wins over
//! `content`. Arguments that are not valid JSON are passed through as a
//! string so the tool layer reports them to the model.
//!
//! HTTP 408, 429 and 5xx, timeouts and connection failures are transport
//! errors (retried by the loop); other failures are protocol errors.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conversation::{Message, Role, ToolCall};
use crate::tools::ToolSchema;

use super::client::{ClientError, ModelClient, ModelResponse, ToolChoice};

pub const DEFAULT_API_KEY_ENV: &str = "AGENTIC_RAG_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpClientConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token. When it is unset no
    /// Authorization header is sent.
    pub api_key_env: String,
    pub timeout_secs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl Default for HttpClientConfig {
    fn default() -> Self {
        HttpClientConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 120,
            temperature: None,
        }
    }
}

pub struct HttpClient {
    config: HttpClientConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(config: HttpClientConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| ClientError::Protocol(format!("cannot build HTTP client: {e}")))?;
        Ok(HttpClient { config, api_key, http })
    }
}

impl ModelClient for HttpClient {
    fn complete(
        &mut self,
        messages: &[Message],
        tools: &[ToolSchema],
        choice: &ToolChoice,
    ) -> Result<ModelResponse, ClientError> {
        let body = request_body(&self.config, messages, tools, choice);
        let mut req = self.http.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            let msg = format!("HTTP {status}: {}", text.chars().take(200).collect::<String>());
            return Err(if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
                ClientError::Transport(msg)
            } else {
                ClientError::Protocol(msg)
            });
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| ClientError::Protocol(format!("response is not JSON: {e}")))?;
        parse_response(&value)
    }
}

fn wire_message(m: &Message) -> Value {
    match m.role {
        Role::System => json!({"role": "system", "content": m.content}),
        Role::User => json!({"role": "user", "content": m.content}),
        Role::Assistant if m.tool_calls.is_empty() => json!({"role": "assistant", "content": m.content}),
        Role::Assistant => {
            let calls: Vec<Value> = m
                .tool_calls
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "type": "function",
                        "function": {"name": c.name, "arguments": c.arguments.to_string()},
                    })
                })
                .collect();
            let content = if m.content.is_empty() { Value::Null } else { json!(m.content) };
            json!({"role": "assistant", "content": content, "tool_calls": calls})
        }
        Role::Tool => json!({
            "role": "tool",
            "tool_call_id": m.tool_call_id.clone().unwrap_or_default(),
            "content": m.content,
        }),
    }
}

pub fn request_body(config: &HttpClientConfig, messages: &[Message], tools: &[ToolSchema], choice: &ToolChoice) -> Value {
    let tool_choice = match choice {
        ToolChoice::Auto => json!("auto"),
        ToolChoice::ForbidTools => json!("none"),
        ToolChoice::RequireTool(name) => json!({"type": "function", "function": {"name": name}}),
    };
    let mut body = json!({
        "model": config.model,
        "messages": messages.iter().map(wire_message).collect::<Vec<_>>(),
    });
    if !tools.is_empty() {
        body["tools"] = Value::Array(tools.iter().map(ToolSchema::to_function_json).collect());
        body["tool_choice"] = tool_choice;
    }
    if let Some(t) = config.temperature {
        body["temperature"] = json!(t);
    }
    body
}

pub fn parse_response(value: &Value) -> Result<ModelResponse, ClientError> {
    let message = value
        .pointer("/choices/0/message")
        .ok_or_else(|| ClientError::Protocol("response has no choices[0].message".into()))?;
    if let Some(calls) = message.get("tool_calls").and_then(Value::as_array) {
        if !calls.is_empty() {
            let mut out = Vec::with_capacity(calls.len());
            for (i, c) in calls.iter().enumerate() {
                let name = c
                    .pointer("/function/name")
                    .and_then(Value::as_str)
                    .ok_or_else(|| ClientError::Protocol(format!("tool call {i} has no function name")))?;
                let raw = c.pointer("/function/arguments");
                let arguments = match raw {
                    Some(Value::String(s)) if s.trim().is_empty() => json!({}),
                    Some(Value::String(s)) => serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.clone())),
                    Some(v) => v.clone(),
                    None => json!({}),
                };
                let id = c
                    .get("id")
                    .and_then(Value::as_str)
                    .map(str::to_owned)
                    .unwrap_or_else(|| format!("call_{i}"));
                out.push(ToolCall {
                    id,
                    name: name.to_owned(),
                    arguments,
                });
            }
            return Ok(ModelResponse::ToolCalls(out));
        }
    }
    let text = message.get("content").and_then(Value::as_str).unwrap_or("");
    Ok(ModelResponse::Text(text.to_owned()))
}
