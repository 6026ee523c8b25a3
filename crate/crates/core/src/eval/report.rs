use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, ToolCounts};

use super::metrics::{mean_stderr, MeanStderr, RecallMode};
use super::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Agentic,
    SingleShot,
}

/// Everything that determined a run, recorded next to its results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub label: String,
    pub mode: RunMode,
    pub recall_mode: RecallMode,
    pub ks: Vec<usize>,
    pub prompt_version: String,
    pub agent: AgentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub query_id: String,
    /// Recall per cutoff k.
    pub recall: BTreeMap<usize, f64>,
    pub ranking: Vec<String>,
    pub total_tokens: usize,
    pub tools: ToolCounts,
    pub iterations: usize,
    pub model_calls: usize,
    pub forced_completion: bool,
    pub aborted: bool,
    /// This query's tokens over the baseline's tokens for the same query.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub queries: usize,
    pub recall: BTreeMap<usize, MeanStderr>,
    pub avg_tools: MeanStderr,
    pub search: MeanStderr,
    pub find: MeanStderr,
    pub open: MeanStderr,
    pub summarize: MeanStderr,
    pub invalid: MeanStderr,
    pub total_tokens: MeanStderr,
    pub iterations: MeanStderr,
    pub forced_completion_rate: f64,
    pub aborted: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_label: Option<String>,
    /// Mean tokens of this run over mean tokens of the baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub settings: RunSettings,
    pub per_query: Vec<QueryReport>,
    pub aggregates: Aggregates,
}

fn column(per_query: &[QueryReport], f: impl Fn(&QueryReport) -> f64) -> MeanStderr {
    mean_stderr(&per_query.iter().map(f).collect::<Vec<_>>())
}

/// A baseline run to compare token cost against.
#[derive(Debug, Clone, Copy)]
pub struct Baseline<'a> {
    pub label: &'a str,
    pub per_query: &'a [QueryReport],
}

/// Aggregates `per_query` and, with a baseline, fills per-query and overall
/// cost ratios. The baseline must cover exactly the same query ids.
pub fn aggregate(
    per_query: &mut [QueryReport],
    ks: &[usize],
    baseline: Option<Baseline<'_>>,
) -> Result<Aggregates, EvalError> {
    if per_query.is_empty() {
        return Err(EvalError::NoQueries);
    }
    let mut cost_ratio = None;
    if let Some(base) = baseline {
        let ours: BTreeSet<&str> = per_query.iter().map(|q| q.query_id.as_str()).collect();
        let theirs: BTreeMap<&str, usize> = base.per_query.iter().map(|q| (q.query_id.as_str(), q.total_tokens)).collect();
        let missing: Vec<String> = ours.iter().filter(|q| !theirs.contains_key(*q)).map(|q| q.to_string()).collect();
        let extra: Vec<String> = theirs.keys().filter(|q| !ours.contains(*q)).map(|q| q.to_string()).collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(EvalError::BaselineMismatch {
                baseline: base.label.to_owned(),
                missing,
                extra,
            });
        }
        for q in per_query.iter_mut() {
            let b = theirs[q.query_id.as_str()];
            q.cost_ratio = Some(if b == 0 { f64::NAN } else { q.total_tokens as f64 / b as f64 });
        }
        let mean_ours = per_query.iter().map(|q| q.total_tokens as f64).sum::<f64>() / per_query.len() as f64;
        let mean_base = base.per_query.iter().map(|q| q.total_tokens as f64).sum::<f64>() / base.per_query.len() as f64;
        cost_ratio = Some(mean_ours / mean_base);
    }
    let per_query: &[QueryReport] = per_query;
    let recall = ks
        .iter()
        .map(|&k| (k, column(per_query, |q| q.recall.get(&k).copied().unwrap_or(0.0))))
        .collect();
    Ok(Aggregates {
        queries: per_query.len(),
        recall,
        avg_tools: column(per_query, |q| q.tools.total() as f64),
        search: column(per_query, |q| q.tools.search as f64),
        find: column(per_query, |q| q.tools.find as f64),
        open: column(per_query, |q| q.tools.open as f64),
        summarize: column(per_query, |q| q.tools.summarize as f64),
        invalid: column(per_query, |q| q.tools.invalid as f64),
        total_tokens: column(per_query, |q| q.total_tokens as f64),
        iterations: column(per_query, |q| q.iterations as f64),
        forced_completion_rate: column(per_query, |q| f64::from(u8::from(q.forced_completion))).mean,
        aborted: per_query.iter().filter(|q| q.aborted).count(),
        baseline_label: baseline.map(|b| b.label.to_owned()),
        cost_ratio,
    })
}
