//! Search backend contract and the reference lexical backend.

pub mod bm25;
pub mod snippet;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusManifest, Document};

pub use bm25::{query_terms, tokenize, Bm25Params, IndexedCorpus};
pub use snippet::{extract_snippet, normalize_whitespace, DEFAULT_SNIPPET_CHARS};

pub const DEFAULT_RESULTS_PER_QUERY: usize = 10;
pub const DEFAULT_MULTI_QUERY_CAP: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("too many queries (max {max})")]
    TooManyQueries { max: usize, got: usize },
    #[error("at least one query is required")]
    NoQueries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub score: f64,
    pub snippet: String,
    pub title: String,
    pub filename: String,
    pub file_type: String,
}

/// What the search tool delegates to. Implementations must return at most `k`
/// hits with non-increasing scores.
pub trait SearchBackend: Send + Sync {
    fn query(&self, text: &str, k: usize) -> Vec<SearchHit>;

    fn supports_semantic_find(&self) -> bool {
        false
    }

    /// Zero-based line indices of the passages in `doc` most related to
    /// `pattern`, best first. Only consulted when
    /// [`supports_semantic_find`](Self::supports_semantic_find) is true.
    fn semantic_find(&self, _doc: &Document, _pattern: &str, _limit: usize) -> Vec<usize> {
        Vec::new()
    }
}

/// BM25 over an in-memory corpus.
#[derive(Debug, Clone)]
pub struct LexicalBackend {
    index: IndexedCorpus,
    corpus: Arc<CorpusManifest>,
    snippet_chars: usize,
}

impl LexicalBackend {
    pub fn new(corpus: Arc<CorpusManifest>) -> Result<Self, SearchError> {
        Self::with_params(corpus, Bm25Params::default())
    }

    pub fn with_params(corpus: Arc<CorpusManifest>, params: Bm25Params) -> Result<Self, SearchError> {
        let index = IndexedCorpus::build_with(&corpus, params)?;
        Ok(LexicalBackend {
            index,
            corpus,
            snippet_chars: DEFAULT_SNIPPET_CHARS,
        })
    }

    pub fn with_snippet_chars(mut self, chars: usize) -> Self {
        self.snippet_chars = chars;
        self
    }

    pub fn index(&self) -> &IndexedCorpus {
        &self.index
    }
}

impl SearchBackend for LexicalBackend {
    fn query(&self, text: &str, k: usize) -> Vec<SearchHit> {
        let terms = query_terms(text);
        self.index
            .score(text, k)
            .into_iter()
            .filter_map(|(doc_id, score)| {
                let doc = self.corpus.get_document(&doc_id).ok()?;
                Some(SearchHit {
                    snippet: extract_snippet(doc, &terms, self.snippet_chars),
                    doc_id,
                    score,
                    title: doc.title.clone(),
                    filename: doc.filename.clone(),
                    file_type: doc.file_type.clone(),
                })
            })
            .collect()
    }
}

/// Runs each query with `per_query_k`, then merges by doc id keeping the
/// maximum score. Output is sorted by score descending, ties by doc id.
pub fn multi_query<S: AsRef<str>>(
    backend: &dyn SearchBackend,
    queries: &[S],
    per_query_k: usize,
    cap: usize,
) -> Result<Vec<SearchHit>, SearchError> {
    if queries.is_empty() {
        return Err(SearchError::NoQueries);
    }
    if queries.len() > cap {
        return Err(SearchError::TooManyQueries {
            max: cap,
            got: queries.len(),
        });
    }
    let mut merged: HashMap<String, SearchHit> = HashMap::new();
    for q in queries {
        for hit in backend.query(q.as_ref(), per_query_k) {
            match merged.get_mut(&hit.doc_id) {
                Some(existing) if existing.score >= hit.score => {}
                Some(existing) => *existing = hit,
                None => {
                    merged.insert(hit.doc_id.clone(), hit);
                }
            }
        }
    }
    let mut hits: Vec<SearchHit> = merged.into_values().collect();
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::TokenCounter;

    struct Fixed(Vec<(&'static str, Vec<(&'static str, f64)>)>);

    impl SearchBackend for Fixed {
        fn query(&self, text: &str, k: usize) -> Vec<SearchHit> {
            self.0
                .iter()
                .find(|(q, _)| *q == text)
                .map(|(_, hits)| {
                    hits.iter()
                        .take(k)
                        .map(|(d, s)| SearchHit {
                            doc_id: d.to_string(),
                            score: *s,
                            snippet: format!("snippet of {d}"),
                            title: d.to_string(),
                            filename: d.to_string(),
                            file_type: "txt".into(),
                        })
                        .collect()
                })
                .unwrap_or_default()
        }
    }

    fn corpus(texts: &[(&str, &str)]) -> Arc<CorpusManifest> {
        Arc::new(CorpusManifest::from_documents(
            texts
                .iter()
                .map(|(id, t)| Document::from_text(id, id, t, TokenCounter::default()))
                .collect(),
        ))
    }

    #[test]
    fn repeated_query_equals_single() {
        let b = LexicalBackend::new(corpus(&[("a", "apple pie"), ("b", "apple tart"), ("c", "pear")])).unwrap();
        let single = multi_query(&b, &["apple"], 10, 5).unwrap();
        let twice = multi_query(&b, &["apple", "apple"], 10, 5).unwrap();
        assert_eq!(single, twice);
        assert_eq!(single, b.query("apple", 10));
    }

    #[test]
    fn disjoint_union() {
        let b = Fixed(vec![
            ("q1", vec![("a", 3.0), ("b", 2.0), ("c", 1.0)]),
            ("q2", vec![("d", 4.0), ("e", 3.0), ("f", 2.0), ("g", 1.0)]),
        ]);
        assert_eq!(multi_query(&b, &["q1", "q2"], 10, 5).unwrap().len(), 7);
    }

    #[test]
    fn overlap_keeps_max_score() {
        // doc "b" is hit by both queries: 2.0 from q1, 3.5 from q2
        let b = Fixed(vec![
            ("q1", vec![("a", 2.5), ("b", 2.0)]),
            ("q2", vec![("b", 3.5), ("c", 1.0)]),
        ]);
        let hits = multi_query(&b, &["q1", "q2"], 10, 5).unwrap();
        let got: Vec<_> = hits.iter().map(|h| (h.doc_id.as_str(), h.score)).collect();
        assert_eq!(got, [("b", 3.5), ("a", 2.5), ("c", 1.0)]);
    }

    #[test]
    fn cap_enforced() {
        let b = Fixed(vec![]);
        let six = ["a", "b", "c", "d", "e", "f"];
        assert_eq!(
            multi_query(&b, &six, 10, 5),
            Err(SearchError::TooManyQueries { max: 5, got: 6 })
        );
        assert_eq!(multi_query::<&str>(&b, &[], 10, 5), Err(SearchError::NoQueries));
    }

    #[test]
    fn hits_carry_metadata_and_snippets() {
        let b = LexicalBackend::new(corpus(&[("notes/a.md", "# Title A\nsome apple text")])).unwrap();
        let hits = b.query("apple", 10);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].title, "Title A");
        assert_eq!(hits[0].filename, "notes/a.md");
        assert_eq!(hits[0].file_type, "md");
        assert!(hits[0].snippet.contains("apple"));
    }
}
