//! The bounded tool-use loop and the single-shot baseline.

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use crate::conversation::{BudgetSignal, Conversation, Message, ToolCall};
use crate::corpus::CorpusManifest;
use crate::search::SearchBackend;
use crate::tools::{
    search_scored, tool_find, tool_open, tool_schemas, tool_search, tool_summarize, ReferenceRegistry, ToolKind,
    ToolResult, ToolSchema,
};

use super::answer::{format_answer, AgentAnswer, Citation, RunStats};
use super::client::{ClientError, ModelClient, ModelResponse, ToolChoice};
use super::config::{AgentConfig, ConfigError};
use super::prompt::{FORCED_COMPLETION_TEXT, SYSTEM_PROMPT};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("query must be non-empty")]
    EmptyQuery,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model client failed: {0}")]
    Client(ClientError),
}

/// A multi-turn conversation over one corpus. Each [`ask`](Session::ask) is
/// one user turn; reference ids stay valid across turns.
pub struct Session {
    config: AgentConfig,
    corpus: Arc<CorpusManifest>,
    backend: Arc<dyn SearchBackend>,
    schemas: Vec<ToolSchema>,
    conversation: Conversation,
    system_prompt: String,
    turns: u32,
}

impl Session {
    pub fn new(
        config: AgentConfig,
        corpus: Arc<CorpusManifest>,
        backend: Arc<dyn SearchBackend>,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let schemas = tool_schemas(&config.tool_limits());
        let conversation = Conversation::new(config.budget(), config.token_counter);
        Ok(Session {
            config,
            corpus,
            backend,
            schemas,
            conversation,
            system_prompt: SYSTEM_PROMPT.to_owned(),
            turns: 0,
        })
    }

    pub fn with_system_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.system_prompt = prompt.into();
        self
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn schemas(&self) -> &[ToolSchema] {
        &self.schemas
    }

    pub fn conversation(&self) -> &Conversation {
        &self.conversation
    }

    pub fn into_conversation(self) -> Conversation {
        self.conversation
    }

    fn begin(&mut self, query: &str) -> Result<(), RunError> {
        if query.trim().is_empty() {
            return Err(RunError::EmptyQuery);
        }
        let counter = self.config.token_counter;
        if self.turns == 0 {
            self.conversation.append(Message::system(self.system_prompt.clone(), counter));
        } else {
            self.conversation.registry_mut().begin_turn();
            self.conversation.begin_episode();
        }
        self.turns += 1;
        self.conversation.append(Message::user(query, counter));
        Ok(())
    }

    fn call(
        &mut self,
        client: &mut dyn ModelClient,
        choice: &ToolChoice,
        stats: &mut RunStats,
    ) -> Result<ModelResponse, ClientError> {
        stats.model_calls += 1;
        let mut attempt = 0;
        loop {
            match client.complete(self.conversation.messages(), &self.schemas, choice) {
                Ok(ModelResponse::ToolCalls(calls)) if calls.is_empty() => {
                    return Err(ClientError::Protocol("response carried an empty tool call list".into()))
                }
                Ok(r) => return Ok(r),
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    attempt += 1;
                    stats.transport_retries += 1;
                    if self.config.retry_backoff_ms > 0 {
                        std::thread::sleep(Duration::from_millis(self.config.retry_backoff_ms));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn finish(&mut self, text: String, mut stats: RunStats, forced: bool) -> AgentAnswer {
        self.conversation.append(Message::assistant(text.clone(), self.config.token_counter));
        let (citations, dropped) = format_answer(&text, self.conversation.registry());
        stats.forced_completion = forced;
        stats.dropped_citations = dropped;
        self.close_stats(&mut stats);
        AgentAnswer { text, citations, stats }
    }

    fn close_stats(&self, stats: &mut RunStats) {
        stats.total_tokens = self.conversation.consumed_tokens();
        stats.final_context_tokens = self.conversation.total_tokens();
    }

    fn abort(&mut self, err: ClientError, mut stats: RunStats) -> Result<AgentAnswer, RunError> {
        if !err.is_retryable() {
            return Err(RunError::Client(err));
        }
        let reason = format!("{err} (gave up after {} retries)", self.config.max_retries);
        let text = format!(
            "Run aborted: {reason}. Iterations: {}, model calls: {}, tool calls: {}.",
            stats.iterations_used,
            stats.model_calls,
            stats.tools.total()
        );
        stats.aborted = Some(reason);
        self.close_stats(&mut stats);
        Ok(AgentAnswer {
            text,
            citations: Vec::new(),
            stats,
        })
    }

    /// Runs the tool-use loop for one user turn.
    ///
    /// Each iteration first checks the context budget: at the threshold the
    /// model is required to summarize (and the context is pruned), near it a
    /// one-time notice is added. After `max_calls` iterations without a text
    /// answer, one tool-free completion is requested. The client is therefore
    /// asked at most `max_calls + 1` times, not counting transport retries.
    pub fn ask(&mut self, client: &mut dyn ModelClient, query: &str) -> Result<AgentAnswer, RunError> {
        self.begin(query)?;
        let mut stats = RunStats::default();
        let mut forced_summarize_last = false;
        for _ in 0..self.config.max_calls {
            let mut choice = ToolChoice::Auto;
            match self.conversation.check_budget() {
                BudgetSignal::Force => {
                    if !self.config.summarize_enabled || forced_summarize_last {
                        break;
                    }
                    choice = ToolChoice::RequireTool(ToolKind::Summarize.as_str().into());
                }
                BudgetSignal::Warn => {
                    if self.conversation.inject_warning() {
                        stats.warnings_issued += 1;
                    }
                }
                BudgetSignal::Ok => {}
            }
            forced_summarize_last = matches!(choice, ToolChoice::RequireTool(_));
            stats.iterations_used += 1;
            let response = match self.call(client, &choice, &mut stats) {
                Ok(r) => r,
                Err(e) => return self.abort(e, stats),
            };
            match response {
                ModelResponse::Text(text) => return Ok(self.finish(text, stats, false)),
                ModelResponse::ToolCalls(calls) => self.run_calls(calls, &mut stats),
            }
        }

        let counter = self.config.token_counter;
        self.conversation.append(Message::system(FORCED_COMPLETION_TEXT, counter));
        match self.call(client, &ToolChoice::ForbidTools, &mut stats) {
            Ok(ModelResponse::Text(text)) => Ok(self.finish(text, stats, true)),
            // tool calls despite the directive are not executed
            Ok(ModelResponse::ToolCalls(_)) => Ok(self.finish(String::new(), stats, true)),
            Err(e) => self.abort(e, stats),
        }
    }

    fn run_calls(&mut self, calls: Vec<ToolCall>, stats: &mut RunStats) {
        let counter = self.config.token_counter;
        self.conversation
            .append(Message::assistant_tool_calls("", calls.clone(), counter));
        for call in &calls {
            let result = execute_tool(
                call,
                self.conversation.registry_mut(),
                &self.corpus,
                self.backend.as_ref(),
                &self.config,
            );
            stats.tools.record(result.tool);
            let prune = match (&result.preserve_refs, result.is_error) {
                (Some(refs), false) => Some(refs.clone()),
                _ => None,
            };
            self.conversation.append(Message::tool(call.id.clone(), &result));
            if let Some(refs) = prune {
                if self.conversation.prune_after_summarize(&refs).is_ok() {
                    stats.prunes += 1;
                }
            }
        }
    }

    /// One search with the query verbatim, then one tool-free answer from
    /// the snippets. Without model citations, the search hits are cited in
    /// backend order with scores relative to the best hit.
    pub fn ask_single_shot(&mut self, client: &mut dyn ModelClient, query: &str) -> Result<AgentAnswer, RunError> {
        self.begin(query)?;
        let mut stats = RunStats {
            iterations_used: 1,
            ..RunStats::default()
        };
        let counter = self.config.token_counter;
        let limits = self.config.tool_limits();
        let arguments = if limits.multi_query_enabled {
            json!({ "queries": [query] })
        } else {
            json!({ "query": query })
        };
        let call = ToolCall {
            id: "single_shot_search".into(),
            name: ToolKind::Search.as_str().into(),
            arguments,
        };
        self.conversation
            .append(Message::assistant_tool_calls("", vec![call.clone()], counter));
        let (result, scored) = search_scored(self.conversation.registry_mut(), self.backend.as_ref(), &[query], &limits);
        stats.tools.record(result.tool);
        self.conversation.append(Message::tool(call.id, &result));

        let text = match self.call(client, &ToolChoice::ForbidTools, &mut stats) {
            Ok(ModelResponse::Text(text)) => text,
            Ok(ModelResponse::ToolCalls(_)) => String::new(),
            Err(e) => return self.abort(e, stats),
        };
        let mut answer = self.finish(text, stats, false);
        if answer.citations.is_empty() {
            let best = scored.first().map_or(1.0, |s| s.1);
            let registry = self.conversation.registry();
            answer.citations = scored
                .iter()
                .filter_map(|(r, score)| {
                    let entry = registry.resolve(r)?;
                    Some(Citation {
                        ref_id: *r,
                        doc_id: entry.doc_id.clone(),
                        relevancy_score: if best > 0.0 { (score / best).clamp(0.0, 1.0) } else { 0.0 },
                    })
                })
                .collect();
        }
        Ok(answer)
    }
}

/// One-query convenience: fresh session, one agentic turn.
pub fn run_query(
    config: &AgentConfig,
    corpus: Arc<CorpusManifest>,
    backend: Arc<dyn SearchBackend>,
    client: &mut dyn ModelClient,
    query: &str,
) -> Result<(AgentAnswer, Conversation), RunError> {
    let mut session = Session::new(config.clone(), corpus, backend)?;
    let answer = session.ask(client, query)?;
    Ok((answer, session.into_conversation()))
}

/// One-query convenience for the single-shot baseline.
pub fn run_single_shot(
    config: &AgentConfig,
    corpus: Arc<CorpusManifest>,
    backend: Arc<dyn SearchBackend>,
    client: &mut dyn ModelClient,
    query: &str,
) -> Result<(AgentAnswer, Conversation), RunError> {
    let mut session = Session::new(config.clone(), corpus, backend)?;
    let answer = session.ask_single_shot(client, query)?;
    Ok((answer, session.into_conversation()))
}

fn missing(kind: ToolKind, what: &str, config: &AgentConfig) -> ToolResult {
    ToolResult::error(kind, format!("missing required parameter: {what}"), config.token_counter)
}

fn invalid(kind: ToolKind, what: &str, config: &AgentConfig) -> ToolResult {
    ToolResult::error(kind, format!("invalid parameter: {what}"), config.token_counter)
}

/// A string, or a list of strings, under any of `keys`.
fn string_list(args: &Value, keys: &[&str]) -> Option<Result<Vec<String>, ()>> {
    let value = keys.iter().find_map(|k| args.get(*k).filter(|v| !v.is_null()))?;
    Some(match value {
        Value::String(s) => Ok(vec![s.clone()]),
        Value::Array(items) => items
            .iter()
            .map(|v| v.as_str().map(str::to_owned).ok_or(()))
            .collect(),
        _ => Err(()),
    })
}

fn ref_id_arg(args: &Value) -> Option<Result<String, ()>> {
    let v = args.get("ref_id").filter(|v| !v.is_null())?;
    Some(v.as_str().map(str::to_owned).ok_or(()))
}

/// Validates the arguments of one tool call and dispatches it. Every failure
/// is an error result; nothing here panics on model input.
pub fn execute_tool(
    call: &ToolCall,
    registry: &mut ReferenceRegistry,
    corpus: &CorpusManifest,
    backend: &dyn SearchBackend,
    config: &AgentConfig,
) -> ToolResult {
    let counter = config.token_counter;
    let limits = config.tool_limits();
    let kind = match ToolKind::from_name(call.name.trim()) {
        Some(ToolKind::Summarize) if !config.summarize_enabled => {
            return ToolResult::error(ToolKind::Invalid, "tool not available: summarize", counter)
        }
        Some(k) => k,
        None => return ToolResult::error(ToolKind::Invalid, format!("unknown tool: {}", call.name), counter),
    };
    let args = &call.arguments;
    if !args.is_object() {
        return ToolResult::error(kind, "malformed arguments: expected a JSON object", counter);
    }
    match kind {
        ToolKind::Search => match string_list(args, &["queries", "query"]) {
            None => missing(kind, "queries", config),
            Some(Err(())) => invalid(kind, "queries must be a string or a list of strings", config),
            Some(Ok(queries)) => tool_search(registry, backend, &queries, &limits),
        },
        ToolKind::Find => {
            let ref_id = match ref_id_arg(args) {
                None => return missing(kind, "reference id", config),
                Some(Err(())) => return invalid(kind, "ref_id must be a string", config),
                Some(Ok(r)) => r,
            };
            let patterns = match string_list(args, &["patterns", "pattern"]) {
                None => return missing(kind, "patterns", config),
                Some(Err(())) => return invalid(kind, "patterns must be a string or a list of strings", config),
                Some(Ok(p)) => p,
            };
            let semantic = match args.get("mode").filter(|v| !v.is_null()) {
                None => false,
                Some(Value::String(m)) if m == "lexical" => false,
                Some(Value::String(m)) if m == "semantic" => config.semantic_find_enabled,
                Some(_) => return invalid(kind, "mode must be \"lexical\" or \"semantic\"", config),
            };
            tool_find(registry, corpus, backend, &ref_id, &patterns, semantic, &limits)
        }
        ToolKind::Open => {
            let ref_id = match ref_id_arg(args) {
                None => return missing(kind, "reference id", config),
                Some(Err(())) => return invalid(kind, "ref_id must be a string", config),
                Some(Ok(r)) => r,
            };
            let line = match args.get("line_number").filter(|v| !v.is_null()) {
                None => None,
                Some(v) => match v.as_u64() {
                    Some(n) => Some(n as usize),
                    None => return invalid(kind, "line_number must be a non-negative integer", config),
                },
            };
            tool_open(registry, corpus, &ref_id, line, &limits)
        }
        ToolKind::Summarize => {
            let summary = match args.get("summary") {
                Some(Value::String(s)) => s.clone(),
                None | Some(Value::Null) => return missing(kind, "summary", config),
                Some(_) => return invalid(kind, "summary must be a string", config),
            };
            let preserve = match string_list(args, &["preserve_refs"]) {
                None => Vec::new(),
                Some(Err(())) => return invalid(kind, "preserve_refs must be a list of strings", config),
                Some(Ok(p)) => p,
            };
            tool_summarize(&summary, &preserve, registry, &limits)
        }
        ToolKind::Invalid => unreachable!("from_name never yields Invalid"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::scripted::{Script, ScriptStep, ScriptedClient};
    use crate::conversation::Role;
    use crate::corpus::Document;
    use crate::search::LexicalBackend;
    use crate::tokens::TokenCounter;

    fn corpus() -> (Arc<CorpusManifest>, Arc<dyn SearchBackend>) {
        let c = TokenCounter::default();
        let docs = vec![
            Document::from_text("a.md", "a.md", "# Turbines\nharbor turbine notes\nsupplied by Kestrel Works", c),
            Document::from_text("b.md", "b.md", "# Bridges\nriver bridge survey", c),
        ];
        let corpus = Arc::new(CorpusManifest::from_documents(docs));
        let backend: Arc<dyn SearchBackend> = Arc::new(LexicalBackend::new(corpus.clone()).unwrap());
        (corpus, backend)
    }

    fn call(name: &str, args: Value) -> ToolCall {
        ToolCall {
            id: "c1".into(),
            name: name.into(),
            arguments: args,
        }
    }

    #[test]
    fn search_open_text_trace() {
        let (corpus, backend) = corpus();
        let mut client = ScriptedClient::new(Script::new(vec![
            ScriptStep::call("search", json!({"queries": ["harbor turbine"]})),
            ScriptStep::call("open", json!({"ref_id": "turn1search1"})),
            ScriptStep::text("Kestrel Works [ref: turn1search1 | 0.9]"),
        ]));
        let (answer, conv) = run_query(&AgentConfig::default(), corpus, backend, &mut client, "who supplied the turbine").unwrap();
        assert_eq!(client.calls_seen(), 3);
        assert_eq!(answer.stats.model_calls, 3);
        assert_eq!(answer.stats.iterations_used, 3);
        assert_eq!((answer.stats.tools.search, answer.stats.tools.open, answer.stats.tools.total()), (1, 1, 2));
        assert!(!answer.stats.forced_completion);
        assert_eq!(answer.citations.len(), 1);
        assert_eq!(answer.citations[0].doc_id, "a.md");
        assert_eq!(answer.stats.total_tokens, conv.consumed_tokens());
        let tool_msgs = conv.messages().iter().filter(|m| m.role == Role::Tool).count();
        assert_eq!(tool_msgs, answer.stats.tools.total());
    }

    #[test]
    fn never_answering_client_is_cut_off() {
        let (corpus, backend) = corpus();
        let script = Script {
            steps: vec![ScriptStep::call("search", json!({"queries": ["turbine"]})).repeating()],
            fallback_text: Some("best effort".into()),
            ..Script::default()
        };
        let mut client = ScriptedClient::new(script);
        let (answer, conv) = run_query(&AgentConfig::default(), corpus, backend, &mut client, "q").unwrap();
        assert_eq!(client.calls_seen(), 16);
        assert_eq!(answer.stats.model_calls, 16);
        assert_eq!(answer.stats.iterations_used, 15);
        assert_eq!(answer.stats.tools.search, 15);
        assert!(answer.stats.forced_completion);
        assert_eq!(answer.text, "best effort");
        assert!(conv.messages().iter().any(|m| m.content == FORCED_COMPLETION_TEXT));
    }

    #[test]
    fn exhaustion_is_an_error() {
        let (corpus, backend) = corpus();
        let mut client = ScriptedClient::new(Script::new(vec![ScriptStep::call("search", json!({"query": "x"}))]));
        let err = run_query(&AgentConfig::default(), corpus, backend, &mut client, "q").unwrap_err();
        assert!(matches!(err, RunError::Client(ClientError::ScriptExhausted { .. })));
    }

    struct Flaky {
        failures: usize,
        calls: usize,
    }

    impl ModelClient for Flaky {
        fn complete(&mut self, _: &[Message], _: &[ToolSchema], _: &ToolChoice) -> Result<ModelResponse, ClientError> {
            self.calls += 1;
            if self.calls <= self.failures {
                Err(ClientError::Transport("connection reset".into()))
            } else {
                Ok(ModelResponse::Text("ok".into()))
            }
        }
    }

    #[test]
    fn transport_errors_are_retried_then_abort() {
        let (corpus, backend) = corpus();
        let config = AgentConfig {
            retry_backoff_ms: 0,
            ..AgentConfig::default()
        };
        let mut flaky = Flaky { failures: 2, calls: 0 };
        let (answer, _) = run_query(&config, corpus.clone(), backend.clone(), &mut flaky, "q").unwrap();
        assert_eq!(answer.text, "ok");
        assert_eq!(answer.stats.transport_retries, 2);

        let mut dead = Flaky { failures: usize::MAX, calls: 0 };
        let (answer, _) = run_query(&config, corpus, backend, &mut dead, "q").unwrap();
        assert_eq!(dead.calls, 3);
        assert!(answer.stats.aborted.is_some());
        assert!(answer.text.starts_with("Run aborted"));
    }

    #[test]
    fn argument_validation() {
        let (corpus, backend) = corpus();
        let config = AgentConfig::default();
        let mut reg = ReferenceRegistry::new();
        let run = |reg: &mut ReferenceRegistry, c: ToolCall, config: &AgentConfig| {
            execute_tool(&c, reg, &corpus, backend.as_ref(), config)
        };
        let r = run(&mut reg, call("open", json!({})), &config);
        assert_eq!(r.rendered_text, "Error: missing required parameter: reference id");
        assert!(run(&mut reg, call("open", json!({"ref_id": 3})), &config).is_error);
        assert!(run(&mut reg, call("search", json!("turbine")), &config).is_error);
        assert!(run(&mut reg, call("search", json!({"queries": [1, 2]})), &config).is_error);
        let unknown = run(&mut reg, call("browse", json!({})), &config);
        assert_eq!(unknown.tool, ToolKind::Invalid);
        assert!(reg.is_empty());

        let ok = run(&mut reg, call("search", json!({"query": "turbine"})), &config);
        assert!(!ok.is_error);
        let open = run(&mut reg, call("open", json!({"ref_id": "turn1search1", "line_number": -1})), &config);
        assert!(open.rendered_text.contains("line_number"));
        let find = run(&mut reg, call("find", json!({"ref_id": "turn1search1", "patterns": ["kestrel"]})), &config);
        assert!(find.rendered_text.contains("2: supplied by Kestrel Works"));
    }

    #[test]
    fn single_query_mode_rejects_lists() {
        let (corpus, backend) = corpus();
        let config = AgentConfig {
            multi_query_enabled: false,
            ..AgentConfig::default()
        };
        let mut reg = ReferenceRegistry::new();
        let r = execute_tool(
            &call("search", json!({"queries": ["a", "b", "c"]})),
            &mut reg,
            &corpus,
            backend.as_ref(),
            &config,
        );
        assert!(r.is_error);
        assert!(r.rendered_text.contains("single-query mode"));
    }

    #[test]
    fn disabled_summarize_is_invalid() {
        let (corpus, backend) = corpus();
        let config = AgentConfig {
            summarize_enabled: false,
            ..AgentConfig::default()
        };
        let mut reg = ReferenceRegistry::new();
        let r = execute_tool(&call("summarize", json!({"summary": "s"})), &mut reg, &corpus, backend.as_ref(), &config);
        assert_eq!(r.tool, ToolKind::Invalid);
        assert!(r.is_error);
    }

    #[test]
    fn single_shot_cites_by_score() {
        let (corpus, backend) = corpus();
        let mut client = ScriptedClient::new(Script::new(vec![ScriptStep::text("not sure")]));
        let (answer, _) = run_single_shot(&AgentConfig::default(), corpus, backend, &mut client, "turbine harbor").unwrap();
        assert_eq!(answer.stats.iterations_used, 1);
        assert_eq!(answer.stats.tools.search, 1);
        assert_eq!(answer.stats.tools.total(), 1);
        assert_eq!(answer.citations[0].doc_id, "a.md");
        assert_eq!(answer.citations[0].relevancy_score, 1.0);
    }

    #[test]
    fn single_shot_without_hits() {
        let (corpus, backend) = corpus();
        let mut client = ScriptedClient::new(Script::new(vec![ScriptStep::text("nothing")]));
        let (answer, _) = run_single_shot(&AgentConfig::default(), corpus, backend, &mut client, "zebra").unwrap();
        assert!(answer.citations.is_empty());
    }
}
