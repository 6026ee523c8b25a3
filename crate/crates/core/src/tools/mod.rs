//! The four retrieval tools exposed to the model: search, find, open and
//! summarize.
//!
//! Every tool returns a [`ToolResult`] whose `rendered_text` is exactly what
//! the model sees. Failures are in-band error results and never touch the
//! reference registry.

mod find;
mod open;
pub mod refs;
mod schema;
mod search;
mod summarize;

use serde::{Deserialize, Serialize};

use crate::tokens::TokenCounter;

pub use find::tool_find;
pub use open::tool_open;
pub use refs::{ParseRefIdError, RefEntry, RefId, ReferenceRegistry};
pub use schema::{tool_schemas, ParamKind, ParamSpec, ToolSchema};
pub use search::{search_scored, tool_search};
pub use summarize::tool_summarize;

pub const DEFAULT_OPEN_WINDOW_LINES: usize = 1800;
pub const DEFAULT_FIND_PASSAGES_PER_PATTERN: usize = 2;
pub const DEFAULT_FIND_CONTEXT_LINES: usize = 3;
pub const DEFAULT_FIND_TOKEN_CAP: usize = 11_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    Search,
    Find,
    Open,
    Summarize,
    /// A call naming an unknown or disabled tool.
    Invalid,
}

impl ToolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ToolKind::Search => "search",
            ToolKind::Find => "find",
            ToolKind::Open => "open",
            ToolKind::Summarize => "summarize",
            ToolKind::Invalid => "invalid",
        }
    }

    pub fn from_name(name: &str) -> Option<ToolKind> {
        match name {
            "search" => Some(ToolKind::Search),
            "find" => Some(ToolKind::Find),
            "open" => Some(ToolKind::Open),
            "summarize" => Some(ToolKind::Summarize),
            _ => None,
        }
    }
}

/// Caps and switches shared by all tools.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolLimits {
    pub multi_query_enabled: bool,
    pub multi_query_cap: usize,
    pub per_query_results: usize,
    pub open_window_lines: usize,
    pub find_passages_per_pattern: usize,
    pub find_context_lines: usize,
    pub find_token_cap: usize,
    pub semantic_find_enabled: bool,
    pub summarize_enabled: bool,
    pub counter: TokenCounter,
}

impl Default for ToolLimits {
    fn default() -> Self {
        ToolLimits {
            multi_query_enabled: true,
            multi_query_cap: crate::search::DEFAULT_MULTI_QUERY_CAP,
            per_query_results: crate::search::DEFAULT_RESULTS_PER_QUERY,
            open_window_lines: DEFAULT_OPEN_WINDOW_LINES,
            find_passages_per_pattern: DEFAULT_FIND_PASSAGES_PER_PATTERN,
            find_context_lines: DEFAULT_FIND_CONTEXT_LINES,
            find_token_cap: DEFAULT_FIND_TOKEN_CAP,
            semantic_find_enabled: false,
            summarize_enabled: true,
            counter: TokenCounter::default(),
        }
    }
}

impl ToolLimits {
    /// Queries accepted per search call.
    pub fn effective_query_cap(&self) -> usize {
        if self.multi_query_enabled {
            self.multi_query_cap
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub tool: ToolKind,
    pub is_error: bool,
    pub ref_ids_mentioned: Vec<RefId>,
    pub rendered_text: String,
    pub token_count: usize,
    pub prunable: bool,
    /// Set on successful summarize results: the validated references to keep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preserve_refs: Option<Vec<RefId>>,
}

impl ToolResult {
    pub fn success(tool: ToolKind, rendered_text: String, refs: Vec<RefId>, counter: TokenCounter) -> Self {
        ToolResult {
            tool,
            is_error: false,
            ref_ids_mentioned: refs,
            token_count: counter.count(&rendered_text),
            prunable: !matches!(tool, ToolKind::Summarize | ToolKind::Invalid),
            rendered_text,
            preserve_refs: None,
        }
    }

    pub fn error(tool: ToolKind, message: impl AsRef<str>, counter: TokenCounter) -> Self {
        let rendered_text = format!("Error: {}", message.as_ref());
        ToolResult {
            tool,
            is_error: true,
            ref_ids_mentioned: Vec::new(),
            token_count: counter.count(&rendered_text),
            prunable: false,
            rendered_text,
            preserve_refs: None,
        }
    }
}
