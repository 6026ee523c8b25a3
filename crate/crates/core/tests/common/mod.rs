#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use agentic_rag::agent::{
    ClientError, ModelClient, ModelResponse, Script, ScriptBook, ScriptedClient, ToolChoice,
};
use agentic_rag::conversation::Message;
use agentic_rag::corpus::{ingest_directory, CorpusManifest, Document, DEFAULT_EXTENSIONS};
use agentic_rag::eval::{load_queries, QueryRecord};
use agentic_rag::search::{LexicalBackend, SearchBackend};
use agentic_rag::tokens::TokenCounter;
use agentic_rag::tools::ToolSchema;

pub fn synthetic_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

pub struct Synthetic {
    pub corpus: Arc<CorpusManifest>,
    pub backend: Arc<dyn SearchBackend>,
    pub queries: Vec<QueryRecord>,
    pub agentic: ScriptBook,
    pub single_shot: ScriptBook,
}

pub fn synthetic() -> Synthetic {
    let dir = synthetic_dir();
    let (corpus, warnings) = ingest_directory(&dir.join("corpus"), DEFAULT_EXTENSIONS, TokenCounter::default()).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    let corpus = Arc::new(corpus);
    let backend: Arc<dyn SearchBackend> = Arc::new(LexicalBackend::new(corpus.clone()).unwrap());
    Synthetic {
        corpus,
        backend,
        queries: load_queries(&dir.join("queries.jsonl")).unwrap(),
        agentic: ScriptBook::load(&dir.join("script_agentic.json")).unwrap(),
        single_shot: ScriptBook::load(&dir.join("script_single_shot.json")).unwrap(),
    }
}

pub fn book_client(book: &ScriptBook, record: &QueryRecord) -> Result<Box<dyn ModelClient>, String> {
    book.lookup(Some(&record.query_id), &record.query)
        .cloned()
        .map(|s| Box::new(ScriptedClient::new(s)) as Box<dyn ModelClient>)
        .ok_or_else(|| format!("no script for {}", record.query_id))
}

pub fn corpus_of(docs: &[(&str, String)]) -> (Arc<CorpusManifest>, Arc<dyn SearchBackend>) {
    let docs = docs
        .iter()
        .map(|(id, text)| Document::from_text(id, id, text, TokenCounter::default()))
        .collect();
    let corpus = Arc::new(CorpusManifest::from_documents(docs));
    let backend: Arc<dyn SearchBackend> = Arc::new(LexicalBackend::new(corpus.clone()).unwrap());
    (corpus, backend)
}

/// Ten 1,800-line documents sharing the word "ledger"; subsequent opens
/// add roughly 20k tokens each.
pub fn context_corpus() -> (Arc<CorpusManifest>, Arc<dyn SearchBackend>) {
    static CACHE: OnceLock<(Arc<CorpusManifest>, Arc<dyn SearchBackend>)> = OnceLock::new();
    CACHE.get_or_init(build_context_corpus).clone()
}

fn build_context_corpus() -> (Arc<CorpusManifest>, Arc<dyn SearchBackend>) {
    let docs: Vec<(String, String)> = (0..10)
        .map(|d| {
            let lines: Vec<String> = (0..1800)
                .map(|n| {
                    if n == 0 {
                        format!("# ledger volume {d}")
                    } else {
                        format!("volume {d} entry {n:04} balance carried xx")
                    }
                })
                .collect();
            (format!("vol{d:02}.txt"), lines.join("\n"))
        })
        .collect();
    let refs: Vec<(&str, String)> = docs.iter().map(|(a, b)| (a.as_str(), b.clone())).collect();
    corpus_of(&refs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub choice: ToolChoice,
    pub context_tokens: usize,
    pub tool_names: Vec<String>,
}

/// Wraps a client and records each directive with the context size it saw.
pub struct Recording<C> {
    pub inner: C,
    pub log: Arc<Mutex<Vec<CallRecord>>>,
}

impl<C: ModelClient> Recording<C> {
    pub fn new(inner: C) -> (Self, Arc<Mutex<Vec<CallRecord>>>) {
        let log = Arc::new(Mutex::new(Vec::new()));
        (Recording { inner, log: log.clone() }, log)
    }
}

impl<C: ModelClient> ModelClient for Recording<C> {
    fn complete(&mut self, messages: &[Message], tools: &[ToolSchema], choice: &ToolChoice) -> Result<ModelResponse, ClientError> {
        self.log.lock().unwrap().push(CallRecord {
            choice: choice.clone(),
            context_tokens: messages.iter().map(|m| m.token_count).sum(),
            tool_names: tools.iter().map(|t| t.name.to_owned()).collect(),
        });
        self.inner.complete(messages, tools, choice)
    }
}

pub fn script(json: serde_json::Value) -> Script {
    serde_json::from_value(json).unwrap()
}
