use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::tools::{RefId, ReferenceRegistry, ToolKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Citation {
    pub ref_id: RefId,
    pub doc_id: String,
    pub relevancy_score: f64,
}

/// Tool messages per kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCounts {
    pub search: usize,
    pub find: usize,
    pub open: usize,
    pub summarize: usize,
    /// Calls naming an unknown or disabled tool.
    pub invalid: usize,
}

impl ToolCounts {
    pub fn record(&mut self, kind: ToolKind) {
        match kind {
            ToolKind::Search => self.search += 1,
            ToolKind::Find => self.find += 1,
            ToolKind::Open => self.open += 1,
            ToolKind::Summarize => self.summarize += 1,
            ToolKind::Invalid => self.invalid += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.search + self.find + self.open + self.summarize + self.invalid
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Loop iterations that reached the model, excluding the forced
    /// completion call.
    pub iterations_used: usize,
    /// Logical completions requested, including the forced completion.
    pub model_calls: usize,
    /// Transport-level re-sends; not counted in `model_calls`.
    pub transport_retries: usize,
    pub tools: ToolCounts,
    /// Tokens appended to the conversation over the run (pruning ignored).
    pub total_tokens: usize,
    /// Tokens in the context when the run ended.
    pub final_context_tokens: usize,
    pub forced_completion: bool,
    pub warnings_issued: usize,
    pub prunes: usize,
    /// Cited ids that are not in the registry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAnswer {
    pub text: String,
    pub citations: Vec<Citation>,
    pub stats: RunStats,
}

fn citation_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\[ref:\s*(turn\d+search\d+)\s*(?:\|\s*([0-9]*\.?[0-9]+)\s*)?\]").expect("valid citation regex")
    })
}

/// Parses `[ref: turnMsearchN | score]` markers. Missing scores count as 1.0
/// and scores are clamped to [0, 1]. Repeated ids keep their best score.
/// Returns the citations, best first (ties by allocation order), and the
/// cited ids the registry does not know.
pub fn format_answer(text: &str, registry: &ReferenceRegistry) -> (Vec<Citation>, Vec<String>) {
    let mut best: BTreeMap<usize, Citation> = BTreeMap::new();
    let mut dropped: Vec<String> = Vec::new();
    for cap in citation_pattern().captures_iter(text) {
        let raw = &cap[1];
        let score = cap
            .get(2)
            .and_then(|m| m.as_str().parse::<f64>().ok())
            .unwrap_or(1.0)
            .clamp(0.0, 1.0);
        let entry = raw.parse::<RefId>().ok().and_then(|r| registry.resolve(&r));
        let Some(entry) = entry else {
            if !dropped.iter().any(|d| d == raw) {
                dropped.push(raw.to_owned());
            }
            continue;
        };
        let order = registry.allocation_index(&entry.ref_id).unwrap_or(usize::MAX);
        best.entry(order)
            .and_modify(|c| c.relevancy_score = c.relevancy_score.max(score))
            .or_insert_with(|| Citation {
                ref_id: entry.ref_id,
                doc_id: entry.doc_id.clone(),
                relevancy_score: score,
            });
    }
    let mut citations: Vec<(usize, Citation)> = best.into_iter().collect();
    // stable sort on an allocation-ordered list keeps the tie rule
    citations.sort_by(|a, b| b.1.relevancy_score.total_cmp(&a.1.relevancy_score));
    (citations.into_iter().map(|(_, c)| c).collect(), dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> ReferenceRegistry {
        let mut reg = ReferenceRegistry::new();
        reg.allocate("a.md", "q");
        reg.allocate("b.md", "q");
        reg.allocate("c.md", "q");
        reg
    }

    fn ids(c: &[Citation]) -> Vec<(String, f64)> {
        c.iter().map(|c| (c.ref_id.to_string(), c.relevancy_score)).collect()
    }

    #[test]
    fn parses_scores_in_order() {
        let (c, d) = format_answer(
            "evidence [ref: turn1search2 | 0.9] and [ref: turn1search1 | 0.6]",
            &registry(),
        );
        assert_eq!(ids(&c), [("turn1search2".into(), 0.9), ("turn1search1".into(), 0.6)]);
        assert_eq!(c[0].doc_id, "b.md");
        assert!(d.is_empty());
    }

    #[test]
    fn duplicates_keep_max() {
        let (c, _) = format_answer("[ref: turn1search3 | 0.5] x [ref:turn1search3|0.8]", &registry());
        assert_eq!(ids(&c), [("turn1search3".into(), 0.8)]);
    }

    #[test]
    fn unknown_dropped_and_noted() {
        let (c, d) = format_answer("[ref: turn1search9 | 0.9] [ref: turn1search1]", &registry());
        assert_eq!(ids(&c), [("turn1search1".into(), 1.0)]);
        assert_eq!(d, ["turn1search9"]);
    }

    #[test]
    fn ties_by_allocation_and_clamping() {
        let (c, _) = format_answer(
            "[ref: turn1search3 | 0.7] [ref: turn1search1 | 0.7] [ref: turn1search2 | 7]",
            &registry(),
        );
        assert_eq!(
            ids(&c),
            [("turn1search2".into(), 1.0), ("turn1search1".into(), 0.7), ("turn1search3".into(), 0.7)]
        );
    }

    #[test]
    fn uncited_text() {
        let (c, d) = format_answer("no idea, see turn1search1", &registry());
        assert!(c.is_empty() && d.is_empty());
    }

    #[test]
    fn counts_total() {
        let mut t = ToolCounts::default();
        for k in [ToolKind::Search, ToolKind::Open, ToolKind::Search, ToolKind::Invalid] {
            t.record(k);
        }
        assert_eq!((t.search, t.open, t.invalid, t.total()), (2, 1, 1, 4));
    }
}
