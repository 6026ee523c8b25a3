//! Message history with token accounting, budget signalling and
//! reference-preserving pruning.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::tokens::TokenCounter;
use crate::tools::{RefId, ReferenceRegistry, ToolKind, ToolResult};

pub const DEFAULT_TOKEN_THRESHOLD: usize = 128_000;
pub const DEFAULT_WARN_FRACTION: f64 = 0.9;

/// Appended once per episode when the budget crosses the warning fraction.
pub const BUDGET_WARNING_TEXT: &str = "Context budget notice: the conversation is approaching its token limit. \
Use the summarize tool to record your findings and list the reference ids to preserve; \
other tool output will then be removed from the context.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    pub arguments: Value,
}

/// What a tool message remembers about the result it carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolResultMeta {
    pub tool: ToolKind,
    pub is_error: bool,
    pub ref_ids: Vec<RefId>,
    pub prunable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneNote {
    pub original_token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_result: Option<ToolResultMeta>,
    pub token_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned: Option<PruneNote>,
}

impl Message {
    fn build(role: Role, content: String, tool_calls: Vec<ToolCall>, counter: TokenCounter) -> Self {
        let token_count = counter.count(&content)
            + tool_calls
                .iter()
                .map(|c| counter.count(&c.arguments.to_string()))
                .sum::<usize>();
        Message {
            role,
            content,
            tool_calls,
            tool_call_id: None,
            tool_result: None,
            token_count,
            pruned: None,
        }
    }

    pub fn system(content: impl Into<String>, counter: TokenCounter) -> Self {
        Self::build(Role::System, content.into(), Vec::new(), counter)
    }

    pub fn user(content: impl Into<String>, counter: TokenCounter) -> Self {
        Self::build(Role::User, content.into(), Vec::new(), counter)
    }

    pub fn assistant(content: impl Into<String>, counter: TokenCounter) -> Self {
        Self::build(Role::Assistant, content.into(), Vec::new(), counter)
    }

    pub fn assistant_tool_calls(content: impl Into<String>, calls: Vec<ToolCall>, counter: TokenCounter) -> Self {
        Self::build(Role::Assistant, content.into(), calls, counter)
    }

    pub fn tool(call_id: impl Into<String>, result: &ToolResult) -> Self {
        Message {
            role: Role::Tool,
            content: result.rendered_text.clone(),
            tool_calls: Vec::new(),
            tool_call_id: Some(call_id.into()),
            tool_result: Some(ToolResultMeta {
                tool: result.tool,
                is_error: result.is_error,
                ref_ids: result.ref_ids_mentioned.clone(),
                prunable: result.prunable,
            }),
            token_count: result.token_count,
            pruned: None,
        }
    }

    /// Tokens this message cost when it was appended, before any pruning.
    pub fn appended_tokens(&self) -> usize {
        self.pruned.as_ref().map_or(self.token_count, |p| p.original_token_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetState {
    Ok,
    Warned,
    Forcing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetSignal {
    Ok,
    Warn,
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextBudget {
    pub threshold: usize,
    pub warn_fraction: f64,
    pub state: BudgetState,
}

impl ContextBudget {
    pub fn new(threshold: usize, warn_fraction: f64) -> Self {
        ContextBudget {
            threshold,
            warn_fraction,
            state: BudgetState::Ok,
        }
    }

    /// Smallest total that triggers the warning.
    pub fn warn_at(&self) -> usize {
        // the epsilon absorbs representation error, e.g. 0.9 * 128000
        (self.warn_fraction * self.threshold as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

impl Default for ContextBudget {
    fn default() -> Self {
        ContextBudget::new(DEFAULT_TOKEN_THRESHOLD, DEFAULT_WARN_FRACTION)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub tokens_before: usize,
    pub tokens_after: usize,
    pub messages_pruned: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConversationError {
    #[error("pruning requires a summarize result in the conversation")]
    NoSummary,
}

pub fn placeholder(refs: &[RefId]) -> String {
    let ids = if refs.is_empty() {
        "none".to_owned()
    } else {
        refs.iter().map(RefId::to_string).collect::<Vec<_>>().join(", ")
    };
    format!("[content removed after summarization; refs: {ids}]")
}

#[derive(Debug, Clone)]
pub struct Conversation {
    messages: Vec<Message>,
    budget: ContextBudget,
    registry: ReferenceRegistry,
    counter: TokenCounter,
    total: usize,
    warning_issued: bool,
}

impl Conversation {
    pub fn new(budget: ContextBudget, counter: TokenCounter) -> Self {
        Conversation {
            messages: Vec::new(),
            budget,
            registry: ReferenceRegistry::new(),
            counter,
            total: 0,
            warning_issued: false,
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn budget(&self) -> &ContextBudget {
        &self.budget
    }

    pub fn registry(&self) -> &ReferenceRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut ReferenceRegistry {
        &mut self.registry
    }

    pub fn counter(&self) -> TokenCounter {
        self.counter
    }

    /// Tokens currently in the context.
    pub fn total_tokens(&self) -> usize {
        self.total
    }

    /// Tokens appended over the whole conversation, ignoring later pruning.
    pub fn consumed_tokens(&self) -> usize {
        self.messages.iter().map(Message::appended_tokens).sum()
    }

    pub fn recompute_total(&self) -> usize {
        self.messages.iter().map(|m| m.token_count).sum()
    }

    pub fn append(&mut self, msg: Message) {
        self.total += msg.token_count;
        self.messages.push(msg);
    }

    /// Starts a new episode: the warning may be issued again.
    pub fn begin_episode(&mut self) {
        self.warning_issued = false;
        self.budget.state = BudgetState::Ok;
    }

    pub fn check_budget(&mut self) -> BudgetSignal {
        if self.total >= self.budget.threshold {
            self.budget.state = BudgetState::Forcing;
            return BudgetSignal::Force;
        }
        if self.total >= self.budget.warn_at() && !self.warning_issued {
            self.budget.state = BudgetState::Warned;
            return BudgetSignal::Warn;
        }
        BudgetSignal::Ok
    }

    /// Appends the budget notice unless one was already issued this episode.
    pub fn inject_warning(&mut self) -> bool {
        if self.warning_issued {
            return false;
        }
        self.warning_issued = true;
        if self.budget.state == BudgetState::Ok {
            self.budget.state = BudgetState::Warned;
        }
        let msg = Message::system(BUDGET_WARNING_TEXT, self.counter);
        self.append(msg);
        true
    }

    pub fn warning_issued(&self) -> bool {
        self.warning_issued
    }

    /// Replaces every prunable tool message that mentions none of `preserve`
    /// with a placeholder listing the refs it held. Messages already shorter
    /// than their placeholder are left as they are, so pruning never grows
    /// the context. Message order and count are unchanged.
    pub fn prune_after_summarize(&mut self, preserve: &[RefId]) -> Result<PruneReport, ConversationError> {
        let has_summary = self
            .messages
            .iter()
            .any(|m| matches!(&m.tool_result, Some(meta) if meta.tool == ToolKind::Summarize && !meta.is_error));
        if !has_summary {
            return Err(ConversationError::NoSummary);
        }
        let tokens_before = self.total;
        let mut messages_pruned = 0;
        for msg in &mut self.messages {
            let Some(meta) = &mut msg.tool_result else { continue };
            if !meta.prunable || msg.pruned.is_some() {
                continue;
            }
            if meta.ref_ids.iter().any(|r| preserve.contains(r)) {
                continue;
            }
            let replacement = placeholder(&meta.ref_ids);
            let new_count = self.counter.count(&replacement);
            if new_count > msg.token_count {
                // already smaller than its placeholder
                continue;
            }
            msg.pruned = Some(PruneNote {
                original_token_count: msg.token_count,
            });
            msg.content = replacement;
            msg.token_count = new_count;
            meta.prunable = false;
            messages_pruned += 1;
        }
        self.total = self.recompute_total();
        self.budget.state = if self.total >= self.budget.threshold {
            BudgetState::Forcing
        } else if self.warning_issued {
            BudgetState::Warned
        } else {
            BudgetState::Ok
        };
        Ok(PruneReport {
            tokens_before,
            tokens_after: self.total,
            messages_pruned,
        })
    }

    /// One JSON object per message, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            index: usize,
            #[serde(flatten)]
            message: &'a Message,
        }
        let mut out = String::new();
        for (index, message) in self.messages.iter().enumerate() {
            let line = serde_json::to_string(&Line { index, message }).expect("message serializes");
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Parses a transcript written by [`Conversation::to_jsonl`].
pub fn parse_transcript(jsonl: &str) -> Result<Vec<Message>, serde_json::Error> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str::<Message>)
        .collect()
}
