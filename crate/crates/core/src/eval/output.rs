//! Files written for each labelled run directory:
//!
//! - `per_query.csv`: one row per query, then `mean` and `stderr` rows
//! - `aggregate.json`: the [`Aggregates`] blob
//! - `report.json`: settings, per-query rows and aggregates
//! - `transcripts.jsonl`: every message of every query, tagged by query id
//! - `judge.jsonl`: query, answer and gold answer for external grading

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::conversation::Message;

use super::batch::QueryRun;
use super::report::{Aggregates, EvalReport};
use super::EvalError;

pub const PER_QUERY_CSV: &str = "per_query.csv";
pub const AGGREGATE_JSON: &str = "aggregate.json";
pub const REPORT_JSON: &str = "report.json";
pub const TRANSCRIPTS_JSONL: &str = "transcripts.jsonl";
pub const JUDGE_JSONL: &str = "judge.jsonl";

fn io(path: &Path, e: impl std::fmt::Display) -> EvalError {
    EvalError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Io(e.to_string())
}

pub fn per_query_csv(report: &EvalReport) -> Result<String, EvalError> {
    let ks = &report.settings.ks;
    let with_cost = report.aggregates.cost_ratio.is_some();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["query_id".into()];
    header.extend(ks.iter().map(|k| format!("recall_at_{k}")));
    header.extend(
        [
            "total_tokens",
            "tools",
            "search",
            "find",
            "open",
            "summarize",
            "invalid",
            "iterations",
            "model_calls",
            "forced_completion",
            "aborted",
        ]
        .map(String::from),
    );
    if with_cost {
        header.push("cost_ratio".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for q in &report.per_query {
        let mut row = vec![q.query_id.clone()];
        row.extend(ks.iter().map(|k| q.recall.get(k).copied().unwrap_or(0.0).to_string()));
        let t = &q.tools;
        row.extend(
            [
                q.total_tokens,
                t.total(),
                t.search,
                t.find,
                t.open,
                t.summarize,
                t.invalid,
                q.iterations,
                q.model_calls,
                usize::from(q.forced_completion),
                usize::from(q.aborted),
            ]
            .map(|v| v.to_string()),
        );
        if with_cost {
            row.push(q.cost_ratio.map_or(String::new(), |c| c.to_string()));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let a: &Aggregates = &report.aggregates;
    let n = a.queries as f64;
    for (name, pick) in [("mean", true), ("stderr", false)] {
        let v = |m: super::MeanStderr| if pick { m.mean } else { m.stderr }.to_string();
        let mut row = vec![name.to_owned()];
        row.extend(ks.iter().map(|k| a.recall.get(k).map_or(String::new(), |m| v(*m))));
        let model_calls = super::metrics::mean_stderr(
            &report.per_query.iter().map(|q| q.model_calls as f64).collect::<Vec<_>>(),
        );
        row.extend([
            v(a.total_tokens),
            v(a.avg_tools),
            v(a.search),
            v(a.find),
            v(a.open),
            v(a.summarize),
            v(a.invalid),
            v(a.iterations),
            v(model_calls),
        ]);
        if pick {
            row.push(a.forced_completion_rate.to_string());
            row.push((a.aborted as f64 / n).to_string());
        } else {
            row.extend([String::new(), String::new()]);
        }
        if with_cost {
            row.push(if pick { a.cost_ratio.map_or(String::new(), |c| c.to_string()) } else { String::new() });
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Io(e.to_string()))
}

#[derive(Serialize)]
struct TranscriptLine<'a> {
    query_id: &'a str,
    index: usize,
    #[serde(flatten)]
    message: &'a Message,
}

pub fn transcripts_jsonl(runs: &[QueryRun]) -> Result<String, EvalError> {
    let mut out = String::new();
    for run in runs {
        for (index, message) in run.conversation.messages().iter().enumerate() {
            let line = TranscriptLine {
                query_id: &run.record.query_id,
                index,
                message,
            };
            out.push_str(&serde_json::to_string(&line).map_err(|e| EvalError::Io(e.to_string()))?);
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct JudgeLine<'a> {
    query_id: &'a str,
    query: &'a str,
    answer: &'a str,
    gold_answer: Option<&'a str>,
    cited_doc_ids: Vec<&'a str>,
}

pub fn judge_jsonl(runs: &[QueryRun]) -> Result<String, EvalError> {
    let mut out = String::new();
    for run in runs {
        let line = JudgeLine {
            query_id: &run.record.query_id,
            query: &run.record.query,
            answer: &run.answer.text,
            gold_answer: run.record.gold_answer.as_deref(),
            cited_doc_ids: run.answer.citations.iter().map(|c| c.doc_id.as_str()).collect(),
        };
        out.push_str(&serde_json::to_string(&line).map_err(|e| EvalError::Io(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

fn pretty<T: Serialize>(v: &T) -> Result<String, EvalError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| EvalError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes all report files into `dir`, creating it if needed.
pub fn write_run_outputs(dir: &Path, report: &EvalReport, runs: &[QueryRun]) -> Result<(), EvalError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let files = [
        (PER_QUERY_CSV, per_query_csv(report)?),
        (AGGREGATE_JSON, pretty(&report.aggregates)?),
        (REPORT_JSON, pretty(report)?),
        (TRANSCRIPTS_JSONL, transcripts_jsonl(runs)?),
        (JUDGE_JSONL, judge_jsonl(runs)?),
    ];
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<EvalReport, EvalError> {
    let path = dir.join(REPORT_JSON);
    let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io(&path, e))
}
