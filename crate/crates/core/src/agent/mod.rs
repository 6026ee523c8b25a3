//! The agent loop: model client contract, scripted and HTTP clients,
//! answer formatting and the bounded iteration itself.

mod answer;
mod client;
mod config;
#[cfg(feature = "http")]
pub mod http;
pub mod prompt;
mod runner;
pub mod scripted;

pub use answer::{format_answer, AgentAnswer, Citation, RunStats, ToolCounts};
pub use client::{ClientError, ModelClient, ModelResponse, ToolChoice};
pub use config::{AgentConfig, ConfigError, DEFAULT_MAX_CALLS, DEFAULT_MAX_RETRIES, DEFAULT_RETRY_BACKOFF_MS};
pub use runner::{execute_tool, run_query, run_single_shot, RunError, Session};
pub use scripted::{Script, ScriptBook, ScriptStep, ScriptedClient};
