use std::collections::BTreeMap;
use std::sync::Arc;

use crate::agent::{AgentAnswer, AgentConfig, ModelClient, Session};
use crate::conversation::Conversation;
use crate::corpus::CorpusManifest;
use crate::search::SearchBackend;

use super::metrics::{rank_documents, recall_at_k, RecallMode};
use super::queries::QueryRecord;
use super::report::{QueryReport, RunMode};
use super::EvalError;

/// One finished query: its answer and full conversation.
#[derive(Debug, Clone)]
pub struct QueryRun {
    pub record: QueryRecord,
    pub answer: AgentAnswer,
    pub conversation: Conversation,
}

/// Builds the client for one query.
pub type ClientFactory<'a> = dyn Fn(&QueryRecord) -> Result<Box<dyn ModelClient>, String> + Sync + 'a;

/// Applies `f` to every item with up to `jobs` worker threads, keeping
/// input order. With one job (or without the `parallel` feature) this is a
/// plain sequential map.
pub fn map_jobs<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if jobs > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
    }
    let _ = jobs;
    items.iter().map(f).collect()
}

/// Runs every query in its own session. Sessions share only the corpus and
/// backend. The first failure in query order is returned.
pub fn run_batch(
    config: &AgentConfig,
    corpus: &Arc<CorpusManifest>,
    backend: &Arc<dyn SearchBackend>,
    queries: &[QueryRecord],
    mode: RunMode,
    jobs: usize,
    make_client: &ClientFactory<'_>,
) -> Result<Vec<QueryRun>, EvalError> {
    config.validate().map_err(|e| EvalError::Config(e.to_string()))?;
    let results = map_jobs(queries, jobs, |record| run_one(config, corpus, backend, record, mode, make_client));
    results.into_iter().collect()
}

fn run_one(
    config: &AgentConfig,
    corpus: &Arc<CorpusManifest>,
    backend: &Arc<dyn SearchBackend>,
    record: &QueryRecord,
    mode: RunMode,
    make_client: &ClientFactory<'_>,
) -> Result<QueryRun, EvalError> {
    let fail = |message: String| EvalError::Run {
        query_id: record.query_id.clone(),
        message,
    };
    let mut client = make_client(record).map_err(fail)?;
    let mut session = Session::new(config.clone(), corpus.clone(), backend.clone()).map_err(|e| fail(e.to_string()))?;
    let answer = match mode {
        RunMode::Agentic => session.ask(client.as_mut(), &record.query),
        RunMode::SingleShot => session.ask_single_shot(client.as_mut(), &record.query),
    }
    .map_err(|e| fail(e.to_string()))?;
    Ok(QueryRun {
        record: record.clone(),
        answer,
        conversation: session.into_conversation(),
    })
}

/// Per-query metrics from finished runs.
pub fn score_run(run: &QueryRun, ks: &[usize], mode: RecallMode) -> QueryReport {
    let ranking = rank_documents(&run.answer.citations, run.conversation.registry());
    let gold = run.record.gold();
    let recall: BTreeMap<usize, f64> = ks.iter().map(|&k| (k, recall_at_k(&ranking, &gold, k, mode))).collect();
    let stats = &run.answer.stats;
    QueryReport {
        query_id: run.record.query_id.clone(),
        recall,
        ranking,
        total_tokens: stats.total_tokens,
        tools: stats.tools,
        iterations: stats.iterations_used,
        model_calls: stats.model_calls,
        forced_completion: stats.forced_completion,
        aborted: stats.aborted.is_some(),
        cost_ratio: None,
    }
}
