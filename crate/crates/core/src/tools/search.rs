use std::fmt::Write;

use crate::search::{multi_query, SearchBackend, SearchError};

use super::{RefId, ReferenceRegistry, ToolKind, ToolLimits, ToolResult};

/// Runs up to the configured number of queries, merges the hits and gives
/// each merged hit a fresh reference id.
pub fn tool_search<S: AsRef<str>>(
    registry: &mut ReferenceRegistry,
    backend: &dyn SearchBackend,
    queries: &[S],
    limits: &ToolLimits,
) -> ToolResult {
    search_scored(registry, backend, queries, limits).0
}

/// Like [`tool_search`], also returning each allocated ref with its backend
/// score, in rendered order.
pub fn search_scored<S: AsRef<str>>(
    registry: &mut ReferenceRegistry,
    backend: &dyn SearchBackend,
    queries: &[S],
    limits: &ToolLimits,
) -> (ToolResult, Vec<(RefId, f64)>) {
    let err = |msg: String| (ToolResult::error(ToolKind::Search, msg, limits.counter), Vec::new());
    let queries: Vec<&str> = queries.iter().map(|q| q.as_ref().trim()).collect();
    if queries.is_empty() {
        return err("at least one query is required".into());
    }
    if queries.iter().any(|q| q.is_empty()) {
        return err("queries must be non-empty".into());
    }
    let cap = limits.effective_query_cap();
    if !limits.multi_query_enabled && queries.len() > 1 {
        return err(format!(
            "single-query mode: search accepts exactly one query per call (got {})",
            queries.len()
        ));
    }
    let hits = match multi_query(backend, &queries, limits.per_query_results, cap) {
        Ok(h) => h,
        Err(SearchError::TooManyQueries { max, .. }) => return err(format!("too many queries (max {max})")),
        Err(e) => return err(e.to_string()),
    };

    let joined = queries.iter().map(|q| format!("\"{q}\"")).collect::<Vec<_>>().join(" | ");
    let mut text = String::new();
    if hits.is_empty() {
        let _ = write!(text, "No results for: {joined}");
        return (ToolResult::success(ToolKind::Search, text, Vec::new(), limits.counter), Vec::new());
    }
    let origin = queries.join(" | ");
    let _ = writeln!(text, "Search results for {joined}");
    let mut refs = Vec::with_capacity(hits.len());
    let mut scored = Vec::with_capacity(hits.len());
    for hit in &hits {
        let ref_id = registry.allocate(&hit.doc_id, &origin);
        refs.push(ref_id);
        scored.push((ref_id, hit.score));
        let _ = write!(
            text,
            "\n[{ref_id}] title: {}\nfilename: {} | file_type: {}\nsnippet: {}\n",
            hit.title, hit.filename, hit.file_type, hit.snippet
        );
    }
    let _ = write!(
        text,
        "\n{} result{} returned.",
        hits.len(),
        if hits.len() == 1 { "" } else { "s" }
    );
    (ToolResult::success(ToolKind::Search, text, refs, limits.counter), scored)
}
