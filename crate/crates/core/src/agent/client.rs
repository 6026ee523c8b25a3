use thiserror::Error;

use crate::conversation::{Message, ToolCall};
use crate::tools::ToolSchema;

/// How the next completion may use tools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToolChoice {
    Auto,
    ForbidTools,
    RequireTool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelResponse {
    /// Never empty.
    ToolCalls(Vec<ToolCall>),
    Text(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClientError {
    /// Network or server-side failure; the loop retries these.
    #[error("transport error: {0}")]
    Transport(String),
    /// A scripted client ran out of responses.
    #[error("script exhausted after {served} responses")]
    ScriptExhausted { served: usize },
    /// The endpoint answered with something the adapter cannot use.
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ClientError::Transport(_))
    }
}

pub trait ModelClient: Send {
    fn complete(
        &mut self,
        messages: &[Message],
        tools: &[ToolSchema],
        choice: &ToolChoice,
    ) -> Result<ModelResponse, ClientError>;
}

impl<C: ModelClient + ?Sized> ModelClient for Box<C> {
    fn complete(
        &mut self,
        messages: &[Message],
        tools: &[ToolSchema],
        choice: &ToolChoice,
    ) -> Result<ModelResponse, ClientError> {
        (**self).complete(messages, tools, choice)
    }
}
