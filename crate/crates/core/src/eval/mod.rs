//! Recall@k from cited documents, token cost, tool usage statistics and the
//! batch runner that produces them.

mod batch;
mod metrics;
pub mod output;
mod queries;
mod report;
mod variant;

use thiserror::Error;

pub use batch::{map_jobs, run_batch, score_run, ClientFactory, QueryRun};
pub use metrics::{mean_stderr, rank_documents, recall_at_k, MeanStderr, RecallMode};
pub use queries::{load_queries, parse_queries, validate_queries, QueryRecord};
pub use report::{aggregate, Aggregates, Baseline, EvalReport, QueryReport, RunMode, RunSettings};
pub use variant::{render_ablation_table, AblationRow, Variant, ABLATION_COLUMNS};

pub const DEFAULT_KS: [usize; 2] = [1, 3];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("query set line {line}: {message}")]
    QueryParse { line: usize, message: String },
    #[error("invalid query set:\n  {}", .0.join("\n  "))]
    InvalidQueries(Vec<String>),
    #[error("no queries to aggregate")]
    NoQueries,
    #[error("baseline {baseline} does not cover the same queries (missing: [{}], extra: [{}])", missing.join(", "), extra.join(", "))]
    BaselineMismatch {
        baseline: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("query {query_id}: {message}")]
    Run { query_id: String, message: String },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

/// Scores finished runs and aggregates them into a report.
pub fn build_report(
    settings: RunSettings,
    runs: &[QueryRun],
    baseline: Option<Baseline<'_>>,
) -> Result<EvalReport, EvalError> {
    let mut per_query: Vec<QueryReport> = runs
        .iter()
        .map(|r| score_run(r, &settings.ks, settings.recall_mode))
        .collect();
    let aggregates = aggregate(&mut per_query, &settings.ks, baseline)?;
    Ok(EvalReport {
        settings,
        per_query,
        aggregates,
    })
}
