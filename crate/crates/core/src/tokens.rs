//! Token counting used for every budget in the harness.
//!
//! No tokenizer is bundled; the default estimate is `ceil(chars / 4)`, which
//! is close enough to common BPE vocabularies on English prose for the
//! order-of-magnitude budgets the loop enforces.

use serde::{Deserialize, Serialize};

/// A deterministic, model-agnostic token estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TokenCounter {
    /// `ceil(char_count / chars_per_token)`.
    Heuristic { chars_per_token: usize },
    /// One token per whitespace-separated word.
    Whitespace,
}

impl Default for TokenCounter {
    fn default() -> Self {
        TokenCounter::Heuristic { chars_per_token: 4 }
    }
}

impl TokenCounter {
    pub fn count(&self, text: &str) -> usize {
        match *self {
            TokenCounter::Heuristic { chars_per_token } => {
                let per = chars_per_token.max(1);
                text.chars().count().div_ceil(per)
            }
            TokenCounter::Whitespace => text.split_whitespace().count(),
        }
    }
}

/// Counts tokens with the default heuristic.
pub fn count_tokens(text: &str) -> usize {
    TokenCounter::default().count(text)
}
