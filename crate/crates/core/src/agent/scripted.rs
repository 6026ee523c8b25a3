//! Deterministic [`ModelClient`] that replays canned responses from JSON.
//!
//! ```json
//! {
//!   "steps": [
//!     {"tool_calls": [{"name": "search", "arguments": {"queries": ["harbor turbine"]}}]},
//!     {"tool_calls": [{"name": "open", "arguments": {"ref_id": "${last_ref}"}}],
//!      "when": {"last_result_contains": "--- lines"}},
//!     {"text": "Answer [ref: ${last_ref} | 0.9]"}
//!   ],
//!   "on_summarize": {"summary": "progress so far", "preserve_refs": ["${last_ref}"]},
//!   "fallback_text": "No answer."
//! }
//! ```
//!
//! Steps are served in order. A step whose guard fails against the latest
//! tool message is skipped for good; a `repeat` step is served indefinitely.
//! Under a forbid-tools directive only text steps (or `fallback_text`) are
//! served; a summarize requirement is answered from `on_summarize`.
//!
//! String arguments and text may contain `${last_ref}` (first reference id in
//! the latest tool message) and `${ref:FILENAME}` (latest reference id listed
//! for that filename in a search result).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::conversation::{Message, Role, ToolCall};
use crate::tools::ToolSchema;

use super::client::{ClientError, ModelClient, ModelResponse, ToolChoice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedCall {
    pub name: String,
    #[serde(default = "empty_object")]
    pub arguments: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Guard {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_result_contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_result_not_contains: Option<String>,
}

impl Guard {
    fn passes(&self, last: Option<&str>) -> bool {
        let last = last.unwrap_or("");
        self.last_result_contains.as_deref().is_none_or(|s| last.contains(s))
            && self.last_result_not_contains.as_deref().is_none_or(|s| !last.contains(s))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ScriptedCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<Guard>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub repeat: bool,
}

impl ScriptStep {
    pub fn text(t: impl Into<String>) -> Self {
        ScriptStep {
            text: Some(t.into()),
            ..Default::default()
        }
    }

    pub fn call(name: &str, arguments: Value) -> Self {
        ScriptStep {
            tool_calls: vec![ScriptedCall {
                name: name.to_owned(),
                arguments,
            }],
            ..Default::default()
        }
    }

    pub fn when(mut self, guard: Guard) -> Self {
        self.when = Some(guard);
        self
    }

    pub fn repeating(mut self) -> Self {
        self.repeat = true;
        self
    }

    fn is_text(&self) -> bool {
        self.tool_calls.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarizeReply {
    pub summary: String,
    #[serde(default)]
    pub preserve_refs: Vec<String>,
}

impl Default for SummarizeReply {
    fn default() -> Self {
        SummarizeReply {
            summary: "checkpoint".into(),
            preserve_refs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub steps: Vec<ScriptStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on_summarize: Option<SummarizeReply>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_text: Option<String>,
}

impl Script {
    pub fn new(steps: Vec<ScriptStep>) -> Self {
        Script {
            steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, s) in self.steps.iter().enumerate() {
            if s.tool_calls.is_empty() == s.text.is_none() {
                return Err(format!("step {i}: exactly one of tool_calls or text is required"));
            }
        }
        Ok(())
    }
}

/// Scripts keyed by query id or query text, with an optional default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptBook {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Script>,
    #[serde(default)]
    pub queries: BTreeMap<String, Script>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptLoadError {
    #[error("cannot read script {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid script JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid script: {0}")]
    Invalid(String),
}

impl ScriptBook {
    /// Accepts either a book or a bare script, which becomes the default.
    pub fn from_json(json: &str) -> Result<Self, ScriptLoadError> {
        let value: Value = serde_json::from_str(json)?;
        let book = if value.get("steps").is_some() {
            ScriptBook {
                default: Some(serde_json::from_value(value)?),
                queries: BTreeMap::new(),
            }
        } else {
            serde_json::from_value(value)?
        };
        for (key, script) in book.default.iter().map(|s| ("default", s)).chain(book.queries.iter().map(|(k, s)| (k.as_str(), s))) {
            script
                .validate()
                .map_err(|e| ScriptLoadError::Invalid(format!("{key}: {e}")))?;
        }
        Ok(book)
    }

    pub fn load(path: &Path) -> Result<Self, ScriptLoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptLoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// The script for a query: by id, then by exact query text, then default.
    pub fn lookup(&self, query_id: Option<&str>, query: &str) -> Option<&Script> {
        query_id
            .and_then(|id| self.queries.get(id))
            .or_else(|| self.queries.get(query))
            .or(self.default.as_ref())
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedClient {
    script: Script,
    cursor: usize,
    served: usize,
    calls_seen: usize,
    next_call_id: usize,
}

impl ScriptedClient {
    pub fn new(script: Script) -> Self {
        ScriptedClient {
            script,
            cursor: 0,
            served: 0,
            calls_seen: 0,
            next_call_id: 1,
        }
    }

    /// Number of `complete` invocations so far, including failed ones.
    pub fn calls_seen(&self) -> usize {
        self.calls_seen
    }

    fn call_id(&mut self) -> String {
        let id = format!("call_{}", self.next_call_id);
        self.next_call_id += 1;
        id
    }

    fn render_calls(&mut self, calls: &[ScriptedCall], messages: &[Message]) -> ModelResponse {
        let calls = calls
            .iter()
            .map(|c| ToolCall {
                id: self.call_id(),
                name: c.name.clone(),
                arguments: substitute_value(&c.arguments, messages),
            })
            .collect();
        ModelResponse::ToolCalls(calls)
    }

    fn next_text(&mut self, messages: &[Message], last: Option<&str>) -> Option<String> {
        while self.cursor < self.script.steps.len() {
            let step = &self.script.steps[self.cursor];
            let usable = step.is_text() && step.when.as_ref().is_none_or(|g| g.passes(last));
            if usable {
                let text = step.text.clone().unwrap_or_default();
                if !step.repeat {
                    self.cursor += 1;
                }
                return Some(substitute(&text, messages));
            }
            self.cursor += 1;
        }
        self.script.fallback_text.as_ref().map(|t| substitute(t, messages))
    }
}

impl ModelClient for ScriptedClient {
    fn complete(
        &mut self,
        messages: &[Message],
        _tools: &[ToolSchema],
        choice: &ToolChoice,
    ) -> Result<ModelResponse, ClientError> {
        self.calls_seen += 1;
        let last = last_tool_content(messages);
        let response = match choice {
            ToolChoice::RequireTool(name) if name == "summarize" => {
                let reply = self.script.on_summarize.clone().unwrap_or_default();
                let call = ScriptedCall {
                    name: "summarize".into(),
                    arguments: serde_json::json!({
                        "summary": reply.summary,
                        "preserve_refs": reply.preserve_refs,
                    }),
                };
                self.render_calls(&[call], messages)
            }
            ToolChoice::RequireTool(name) => {
                return Err(ClientError::Protocol(format!("scripted client cannot satisfy required tool {name}")))
            }
            ToolChoice::ForbidTools => match self.next_text(messages, last) {
                Some(t) => ModelResponse::Text(t),
                None => return Err(ClientError::ScriptExhausted { served: self.served }),
            },
            ToolChoice::Auto => loop {
                let Some(step) = self.script.steps.get(self.cursor).cloned() else {
                    return Err(ClientError::ScriptExhausted { served: self.served });
                };
                if !step.when.as_ref().is_none_or(|g| g.passes(last)) {
                    self.cursor += 1;
                    continue;
                }
                if !step.repeat {
                    self.cursor += 1;
                }
                break if step.is_text() {
                    ModelResponse::Text(substitute(step.text.as_deref().unwrap_or(""), messages))
                } else {
                    self.render_calls(&step.tool_calls, messages)
                };
            },
        };
        self.served += 1;
        Ok(response)
    }
}

fn last_tool_content(messages: &[Message]) -> Option<&str> {
    messages
        .iter()
        .rev()
        .find(|m| m.role == Role::Tool)
        .map(|m| m.content.as_str())
}

fn first_ref(text: &str) -> Option<&str> {
    let start = text.find("[turn")?;
    let rest = &text[start + 1..];
    let end = rest.find(']')?;
    let candidate = &rest[..end];
    candidate.parse::<crate::tools::RefId>().ok().map(|_| candidate)
}

fn ref_for_filename(messages: &[Message], filename: &str) -> Option<String> {
    let needle = format!("\nfilename: {filename} |");
    for m in messages.iter().rev().filter(|m| m.role == Role::Tool) {
        let content = &m.content;
        let mut found = None;
        let mut from = 0;
        while let Some(pos) = content[from..].find(&needle) {
            let at = from + pos;
            // the ref sits at the start of the line before
            let line_start = content[..at].rfind('\n').map_or(0, |i| i + 1);
            if let Some(r) = first_ref(&content[line_start..at]) {
                found = Some(r.to_owned());
            }
            from = at + needle.len();
        }
        if found.is_some() {
            return found;
        }
    }
    None
}

fn substitute(text: &str, messages: &[Message]) -> String {
    if !text.contains("${") {
        return text.to_owned();
    }
    let mut out = text.to_owned();
    if out.contains("${last_ref}") {
        if let Some(r) = last_tool_content(messages).and_then(first_ref) {
            out = out.replace("${last_ref}", r);
        }
    }
    let mut from = 0;
    while let Some(pos) = out[from..].find("${ref:") {
        let start = from + pos;
        let Some(len) = out[start..].find('}') else { break };
        let filename = &out[start + 6..start + len];
        match ref_for_filename(messages, filename) {
            Some(r) => {
                out.replace_range(start..start + len + 1, &r);
                from = start + r.len();
            }
            None => from = start + len + 1,
        }
    }
    out
}

fn substitute_value(value: &Value, messages: &[Message]) -> Value {
    match value {
        Value::String(s) => Value::String(substitute(s, messages)),
        Value::Array(items) => Value::Array(items.iter().map(|v| substitute_value(v, messages)).collect()),
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), substitute_value(v, messages)))
                .collect(),
        ),
        other => other.clone(),
    }
}
