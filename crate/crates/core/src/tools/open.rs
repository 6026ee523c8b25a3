use std::fmt::Write;

use crate::corpus::CorpusManifest;

use super::{ReferenceRegistry, ToolKind, ToolLimits, ToolResult};

/// Header line of an open window, zero-based and inclusive.
pub fn window_header(start: usize, end_inclusive: usize, total: usize) -> String {
    format!("Viewing lines [{start}-{end_inclusive}] of {total} lines")
}

/// Returns lines `[start, min(start + window, total))` of the document behind
/// `ref_id`, each prefixed with its absolute zero-based line number.
pub fn tool_open(
    registry: &ReferenceRegistry,
    corpus: &CorpusManifest,
    ref_id: &str,
    line_number: Option<usize>,
    limits: &ToolLimits,
) -> ToolResult {
    let err = |msg: String| ToolResult::error(ToolKind::Open, msg, limits.counter);
    let Some(entry) = registry.resolve_str(ref_id) else {
        return err(format!("unknown reference id: {}", ref_id.trim()));
    };
    let doc = match corpus.get_document(&entry.doc_id) {
        Ok(d) => d,
        Err(e) => return err(e.to_string()),
    };
    let start = line_number.unwrap_or(0);
    let total = doc.total_lines;
    if start >= total {
        return err(format!("line number {start} beyond document end ({total} lines)"));
    }
    let end = (start + limits.open_window_lines.max(1)).min(total);
    let mut text = window_header(start, end - 1, total);
    let _ = write!(text, "\n[{}] {}\n", entry.ref_id, doc.filename);
    for (n, line) in doc.lines[start..end].iter().enumerate() {
        let _ = writeln!(text, "{}: {line}", start + n);
    }
    ToolResult::success(ToolKind::Open, text, vec![entry.ref_id], limits.counter)
}
