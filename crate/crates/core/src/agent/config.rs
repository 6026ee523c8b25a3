use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conversation::{ContextBudget, DEFAULT_TOKEN_THRESHOLD, DEFAULT_WARN_FRACTION};
use crate::search::{DEFAULT_MULTI_QUERY_CAP, DEFAULT_RESULTS_PER_QUERY};
use crate::tokens::TokenCounter;
use crate::tools::{
    ToolLimits, DEFAULT_FIND_CONTEXT_LINES, DEFAULT_FIND_PASSAGES_PER_PATTERN, DEFAULT_FIND_TOKEN_CAP,
    DEFAULT_OPEN_WINDOW_LINES,
};

pub const DEFAULT_MAX_CALLS: usize = 15;
pub const DEFAULT_MAX_RETRIES: usize = 2;
pub const DEFAULT_RETRY_BACKOFF_MS: u64 = 500;

#[derive(Debug, Error, PartialEq)]
#[error("invalid agent config: {0}")]
pub struct ConfigError(pub String);

/// Every tunable of the loop and its tools. Unknown keys are rejected when
/// deserializing; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub max_calls: usize,
    pub token_threshold: usize,
    pub warn_fraction: f64,
    pub multi_query_enabled: bool,
    pub multi_query_cap: usize,
    pub per_query_results: usize,
    pub open_window_lines: usize,
    pub find_passages_per_pattern: usize,
    pub find_context_lines: usize,
    pub find_token_cap: usize,
    pub semantic_find_enabled: bool,
    pub summarize_enabled: bool,
    pub max_retries: usize,
    pub retry_backoff_ms: u64,
    pub token_counter: TokenCounter,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            max_calls: DEFAULT_MAX_CALLS,
            token_threshold: DEFAULT_TOKEN_THRESHOLD,
            warn_fraction: DEFAULT_WARN_FRACTION,
            multi_query_enabled: true,
            multi_query_cap: DEFAULT_MULTI_QUERY_CAP,
            per_query_results: DEFAULT_RESULTS_PER_QUERY,
            open_window_lines: DEFAULT_OPEN_WINDOW_LINES,
            find_passages_per_pattern: DEFAULT_FIND_PASSAGES_PER_PATTERN,
            find_context_lines: DEFAULT_FIND_CONTEXT_LINES,
            find_token_cap: DEFAULT_FIND_TOKEN_CAP,
            semantic_find_enabled: false,
            summarize_enabled: true,
            max_retries: DEFAULT_MAX_RETRIES,
            retry_backoff_ms: DEFAULT_RETRY_BACKOFF_MS,
            token_counter: TokenCounter::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("max_calls", self.max_calls),
            ("token_threshold", self.token_threshold),
            ("multi_query_cap", self.multi_query_cap),
            ("per_query_results", self.per_query_results),
            ("open_window_lines", self.open_window_lines),
            ("find_passages_per_pattern", self.find_passages_per_pattern),
            ("find_token_cap", self.find_token_cap),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError(format!("{name} must be at least 1")));
        }
        if !(self.warn_fraction > 0.0 && self.warn_fraction <= 1.0) {
            return Err(ConfigError(format!(
                "warn_fraction must be in (0, 1], got {}",
                self.warn_fraction
            )));
        }
        if let TokenCounter::Heuristic { chars_per_token: 0 } = self.token_counter {
            return Err(ConfigError("chars_per_token must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tool_limits(&self) -> ToolLimits {
        ToolLimits {
            multi_query_enabled: self.multi_query_enabled,
            multi_query_cap: self.multi_query_cap,
            per_query_results: self.per_query_results,
            open_window_lines: self.open_window_lines,
            find_passages_per_pattern: self.find_passages_per_pattern,
            find_context_lines: self.find_context_lines,
            find_token_cap: self.find_token_cap,
            semantic_find_enabled: self.semantic_find_enabled,
            summarize_enabled: self.summarize_enabled,
            counter: self.token_counter,
        }
    }

    pub fn budget(&self) -> ContextBudget {
        ContextBudget::new(self.token_threshold, self.warn_fraction)
    }
}
