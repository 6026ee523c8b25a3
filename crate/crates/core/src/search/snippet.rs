//! Query-biased snippet extraction.

use std::collections::HashSet;

use crate::corpus::Document;

use super::bm25::tokenize;

pub const DEFAULT_SNIPPET_CHARS: usize = 300;

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Returns the word-aligned window of at most `budget` characters with the
/// most query-term hits. Falls back to the document head when no term occurs.
/// Ties go to the earliest window.
pub fn extract_snippet(doc: &Document, query_terms: &[String], budget: usize) -> String {
    if budget == 0 {
        return String::new();
    }
    let text = normalize_whitespace(&doc.text());
    let words: Vec<&str> = text.split(' ').filter(|w| !w.is_empty()).collect();
    if words.is_empty() {
        return String::new();
    }
    let wanted: HashSet<&str> = query_terms.iter().map(String::as_str).collect();
    let hits: Vec<usize> = words
        .iter()
        .map(|w| tokenize(w).filter(|t| wanted.contains(t.as_str())).count())
        .collect();
    let lens: Vec<usize> = words.iter().map(|w| w.chars().count()).collect();

    // Sliding window [start, end) over words; width counts separating spaces.
    let mut best: Option<(usize, usize, usize)> = None; // (hits, start, end)
    let mut head: Option<(usize, usize)> = None;
    let mut end = 0usize;
    let mut width = 0usize;
    let mut window_hits = 0usize;
    for start in 0..words.len() {
        if end < start {
            end = start;
            width = 0;
            window_hits = 0;
        }
        while end < words.len() {
            let added = lens[end] + usize::from(end > start);
            if width + added > budget {
                break;
            }
            width += added;
            window_hits += hits[end];
            end += 1;
        }
        if end == start {
            continue;
        }
        if start == 0 {
            head = Some((0, end));
        }
        if window_hits > 0 && best.is_none_or(|(h, _, _)| window_hits > h) {
            best = Some((window_hits, start, end));
        }
        window_hits -= hits[start];
        width -= lens[start] + usize::from(end > start + 1);
    }

    match (best, head) {
        (Some((_, start, end)), _) => words[start..end].join(" "),
        (None, Some((start, end))) => words[start..end].join(" "),
        // the first word alone exceeds the budget
        (None, None) => words[0].chars().take(budget).collect(),
    }
}
