use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusManifest;

use super::EvalError;

/// One line of a query-set JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub query_id: String,
    pub query: String,
    pub gold_doc_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<String>,
}

impl QueryRecord {
    /// Gold ids as a set (duplicates in the file collapse).
    pub fn gold(&self) -> BTreeSet<&str> {
        self.gold_doc_ids.iter().map(String::as_str).collect()
    }
}

pub fn parse_queries(jsonl: &str) -> Result<Vec<QueryRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| EvalError::QueryParse { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryRecord>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    parse_queries(&text)
}

/// Checks ids are unique, queries non-empty and gold sets non-empty and
/// drawn from the corpus. Lists every offender.
pub fn validate_queries(records: &[QueryRecord], corpus: &CorpusManifest) -> Result<(), EvalError> {
    let mut problems = Vec::new();
    let mut seen = BTreeSet::new();
    if records.is_empty() {
        problems.push("query set is empty".to_owned());
    }
    for r in records {
        if r.query_id.trim().is_empty() {
            problems.push("a query has an empty query_id".to_owned());
        } else if !seen.insert(r.query_id.as_str()) {
            problems.push(format!("{}: duplicate query_id", r.query_id));
        }
        if r.query.trim().is_empty() {
            problems.push(format!("{}: empty query text", r.query_id));
        }
        if r.gold_doc_ids.is_empty() {
            problems.push(format!("{}: no gold documents", r.query_id));
        }
        for g in &r.gold_doc_ids {
            if !corpus.contains(g) {
                problems.push(format!("{}: gold document not in corpus: {g}", r.query_id));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(EvalError::InvalidQueries(problems))
    }
}
