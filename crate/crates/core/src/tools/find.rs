use std::collections::HashSet;
use std::fmt::Write;

use crate::corpus::{CorpusManifest, Document};
use crate::search::{normalize_whitespace, SearchBackend};

use super::{ReferenceRegistry, ToolKind, ToolLimits, ToolResult};

struct Passage {
    first: usize,
    last: usize,
}

/// In-document pattern search over the document behind `ref_id`.
///
/// Lexical matching is case-insensitive substring matching on single lines.
/// Each pattern yields at most `find_passages_per_pattern` passages of the
/// matching line plus `find_context_lines` on each side; passages whose
/// normalized content was already emitted are skipped. Rendering stops at a
/// passage boundary once the next passage would push the whole output past
/// `find_token_cap`.
pub fn tool_find<S: AsRef<str>>(
    registry: &ReferenceRegistry,
    corpus: &CorpusManifest,
    backend: &dyn SearchBackend,
    ref_id: &str,
    patterns: &[S],
    semantic: bool,
    limits: &ToolLimits,
) -> ToolResult {
    let err = |msg: String| ToolResult::error(ToolKind::Find, msg, limits.counter);
    let Some(entry) = registry.resolve_str(ref_id) else {
        return err(format!("unknown reference id: {}", ref_id.trim()));
    };
    let patterns: Vec<&str> = patterns
        .iter()
        .map(|p| p.as_ref().trim())
        .filter(|p| !p.is_empty())
        .collect();
    if patterns.is_empty() {
        return err("at least one non-empty pattern is required".into());
    }
    let doc = match corpus.get_document(&entry.doc_id) {
        Ok(d) => d,
        Err(e) => return err(e.to_string()),
    };
    let ref_key = entry.ref_id;

    let mut notice = None;
    let use_semantic = semantic && backend.supports_semantic_find();
    if semantic && !use_semantic {
        notice = Some("Note: semantic find is not supported by this search backend; using lexical matching.");
    }

    let mut seen: HashSet<String> = HashSet::new();
    let mut groups: Vec<(&str, Vec<Passage>, usize)> = Vec::new();
    let mut any_match = false;
    for pattern in &patterns {
        let candidates: Box<dyn Iterator<Item = usize>> = if use_semantic {
            Box::new(
                backend
                    .semantic_find(doc, pattern, limits.find_passages_per_pattern * 4)
                    .into_iter(),
            )
        } else {
            Box::new(lexical_matches(doc, pattern))
        };
        let mut passages = Vec::new();
        let mut duplicates = 0usize;
        for line in candidates {
            if passages.len() >= limits.find_passages_per_pattern {
                break;
            }
            if line >= doc.total_lines {
                continue;
            }
            any_match = true;
            let first = line.saturating_sub(limits.find_context_lines);
            let last = (line + limits.find_context_lines).min(doc.total_lines - 1);
            let key = normalize_whitespace(&doc.lines[first..=last].join("\n"));
            if seen.insert(key) {
                passages.push(Passage { first, last });
            } else {
                duplicates += 1;
            }
        }
        groups.push((pattern, passages, duplicates));
    }

    if !any_match {
        let text = format!(
            "No matches for: {} in [{ref_key}] {}",
            patterns.join(", "),
            doc.filename
        );
        return ToolResult::success(ToolKind::Find, text, vec![ref_key], limits.counter);
    }

    let mut text = format!("Find in [{ref_key}] {} ({} lines)\n", doc.filename, doc.total_lines);
    if let Some(n) = notice {
        let _ = writeln!(text, "{n}");
    }
    let total_passages: usize = groups.iter().map(|g| g.1.len()).sum();
    let reserve = limits.counter.count(&truncation_notice(limits.find_token_cap, total_passages));
    let mut rendered = 0usize;
    let mut truncated = false;
    'outer: for (pattern, passages, duplicates) in &groups {
        let mut head = format!(
            "\nPattern \"{pattern}\": {} passage{}",
            passages.len(),
            if passages.len() == 1 { "" } else { "s" }
        );
        if *duplicates > 0 {
            let _ = write!(head, " ({duplicates} duplicate{} omitted)", if *duplicates == 1 { "" } else { "s" });
        }
        head.push('\n');
        let mut pending = head;
        if passages.is_empty() {
            if !fits(&text, &pending, reserve, limits) {
                truncated = true;
                break;
            }
            text.push_str(&pending);
            continue;
        }
        for p in passages {
            let mut block = format!("--- lines {}-{} ---\n", p.first, p.last);
            for n in p.first..=p.last {
                let _ = writeln!(block, "{n}: {}", doc.lines[n]);
            }
            pending.push_str(&block);
            if !fits(&text, &pending, reserve, limits) {
                truncated = true;
                break 'outer;
            }
            text.push_str(&pending);
            pending.clear();
            rendered += 1;
        }
    }
    if truncated {
        text.push_str(&truncation_notice(limits.find_token_cap, total_passages - rendered));
    }
    ToolResult::success(ToolKind::Find, text, vec![ref_key], limits.counter)
}

fn fits(text: &str, addition: &str, reserve: usize, limits: &ToolLimits) -> bool {
    let mut candidate = String::with_capacity(text.len() + addition.len());
    candidate.push_str(text);
    candidate.push_str(addition);
    limits.counter.count(&candidate) + reserve <= limits.find_token_cap
}

fn truncation_notice(cap: usize, omitted: usize) -> String {
    format!("\n[truncated: output limited to {cap} tokens; {omitted} passage(s) omitted]\n")
}

fn lexical_matches<'a>(doc: &'a Document, pattern: &str) -> impl Iterator<Item = usize> + 'a {
    let needle = pattern.to_lowercase();
    doc.lines
        .iter()
        .enumerate()
        .filter(move |(_, l)| l.to_lowercase().contains(&needle))
        .map(|(i, _)| i)
}
