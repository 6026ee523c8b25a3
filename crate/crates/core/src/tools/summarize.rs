use std::fmt::Write;

use super::{RefId, ReferenceRegistry, ToolKind, ToolLimits, ToolResult};

/// Records the model's summary and the references it wants kept. Unknown or
/// malformed ids are dropped with a notice. The result is never prunable and
/// carries the validated preserve set for the conversation to act on.
pub fn tool_summarize<S: AsRef<str>>(
    summary: &str,
    preserve_refs: &[S],
    registry: &ReferenceRegistry,
    limits: &ToolLimits,
) -> ToolResult {
    let mut kept: Vec<RefId> = Vec::new();
    let mut dropped: Vec<String> = Vec::new();
    for raw in preserve_refs {
        let raw = raw.as_ref().trim();
        match raw.parse::<RefId>() {
            Ok(r) if registry.contains(&r) => {
                if !kept.contains(&r) {
                    kept.push(r);
                }
            }
            _ => dropped.push(raw.to_owned()),
        }
    }
    let mut text = format!("Summary recorded.\n{}\n", summary.trim());
    let list = kept.iter().map(RefId::to_string).collect::<Vec<_>>().join(", ");
    let _ = write!(text, "Preserved references: {}", if list.is_empty() { "none" } else { &list });
    if !dropped.is_empty() {
        let _ = write!(text, "\nNote: dropped unknown references: {}", dropped.join(", "));
    }
    let mut result = ToolResult::success(ToolKind::Summarize, text, kept.clone(), limits.counter);
    result.preserve_refs = Some(kept);
    result
}
