//! Inverted index with Okapi BM25 scoring.

use std::collections::{BTreeSet, HashMap};

use crate::corpus::CorpusManifest;

use super::SearchError;

/// Lowercased alphanumeric word extraction shared by indexing, querying and
/// snippet scoring.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Distinct query terms in sorted order. Repeated query terms count once.
pub fn query_terms(text: &str) -> Vec<String> {
    tokenize(text).collect::<BTreeSet<_>>().into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub term_frequency: u32,
}

/// Immutable after [`IndexedCorpus::build`]; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedCorpus {
    postings: HashMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    params: Bm25Params,
}

impl IndexedCorpus {
    pub fn build(manifest: &CorpusManifest) -> Result<Self, SearchError> {
        Self::build_with(manifest, Bm25Params::default())
    }

    pub fn build_with(manifest: &CorpusManifest, params: Bm25Params) -> Result<Self, SearchError> {
        if manifest.is_empty() {
            return Err(SearchError::EmptyCorpus);
        }
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_ids = Vec::with_capacity(manifest.len());
        let mut doc_lengths = Vec::with_capacity(manifest.len());
        for (ordinal, doc) in manifest.documents().iter().enumerate() {
            let mut tf: HashMap<String, u32> = HashMap::new();
            let mut length = 0u32;
            for line in &doc.lines {
                for term in tokenize(line) {
                    *tf.entry(term).or_default() += 1;
                    length += 1;
                }
            }
            for (term, term_frequency) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: ordinal as u32,
                    term_frequency,
                });
            }
            doc_ids.push(doc.doc_id.clone());
            doc_lengths.push(length);
        }
        for list in postings.values_mut() {
            list.sort_by_key(|p| p.doc);
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Ok(IndexedCorpus {
            postings,
            doc_ids,
            doc_lengths,
            avg_doc_length,
            params,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc_id))
            .ok()
            .map(|i| self.doc_lengths[i])
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`; never negative.
    pub fn idf(&self, document_frequency: usize) -> f64 {
        let n = self.doc_count() as f64;
        let df = document_frequency as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top `k` documents with positive score, by score descending then
    /// ascending doc id.
    pub fn score(&self, text: &str, k: usize) -> Vec<(String, f64)> {
        let terms = query_terms(text);
        let mut scores = vec![0.0f64; self.doc_count()];
        let mut touched = vec![false; self.doc_count()];
        let Bm25Params { k1, b } = self.params;
        for term in &terms {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(list.len());
            for p in list {
                let tf = f64::from(p.term_frequency);
                let len = f64::from(self.doc_lengths[p.doc as usize]);
                let norm = k1 * (1.0 - b + b * len / self.avg_doc_length);
                scores[p.doc as usize] += idf * tf * (k1 + 1.0) / (tf + norm);
                touched[p.doc as usize] = true;
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores
            .into_iter()
            .enumerate()
            .filter(|&(i, s)| touched[i] && s > 0.0)
            .map(|(i, s)| (i as u32, s))
            .collect();
        // doc ordinals follow ascending doc_id, so ordinal order is the tie-break
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(ord, s)| (self.doc_id(ord).to_owned(), s))
            .collect()
    }
}
