use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::agent::Citation;
use crate::tools::ReferenceRegistry;

/// How multi-gold recall is normalised.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    /// |top-k ∩ gold| / |gold|
    #[default]
    SetRecall,
    /// 1 if any gold document is in the top k, else 0.
    HitRate,
}

/// Cited documents, best first. Citations are ordered by score, ties by
/// allocation order; a document cited more than once keeps its best rank.
/// Citations whose reference is unknown to `registry` are ignored.
pub fn rank_documents(citations: &[Citation], registry: &ReferenceRegistry) -> Vec<String> {
    let mut keyed: Vec<(&Citation, usize)> = citations
        .iter()
        .filter_map(|c| registry.allocation_index(&c.ref_id).map(|i| (c, i)))
        .collect();
    keyed.sort_by(|a, b| b.0.relevancy_score.total_cmp(&a.0.relevancy_score).then(a.1.cmp(&b.1)));
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (_, idx) in keyed {
        let doc = registry.entries()[idx].doc_id.as_str();
        if seen.insert(doc) {
            out.push(doc.to_owned());
        }
    }
    out
}

/// `k` must be at least 1 and `gold` non-empty; violations score 0.
pub fn recall_at_k<S: AsRef<str>>(ranking: &[S], gold: &BTreeSet<&str>, k: usize, mode: RecallMode) -> f64 {
    if k == 0 || gold.is_empty() {
        return 0.0;
    }
    let mut hits = BTreeSet::new();
    for doc in ranking.iter().take(k) {
        if gold.contains(doc.as_ref()) {
            hits.insert(doc.as_ref());
        }
    }
    match mode {
        RecallMode::SetRecall => hits.len() as f64 / gold.len() as f64,
        RecallMode::HitRate => {
            if hits.is_empty() {
                0.0
            } else {
                1.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

/// Mean and standard error of the mean (sample standard deviation over
/// √n). One value has stderr 0; no values give NaN.
pub fn mean_stderr(values: &[f64]) -> MeanStderr {
    let n = values.len();
    if n == 0 {
        return MeanStderr {
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanStderr { mean, stderr: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanStderr {
        mean,
        stderr: (var / n as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gold<'a>(ids: &[&'a str]) -> BTreeSet<&'a str> {
        ids.iter().copied().collect()
    }

    #[test]
    fn worked_examples() {
        let g = gold(&["g1", "g2"]);
        assert_eq!(recall_at_k(&["g1", "x", "g2"], &g, 1, RecallMode::SetRecall), 0.5);
        assert_eq!(recall_at_k(&["x", "g1"], &gold(&["g1"]), 1, RecallMode::SetRecall), 0.0);
        let seven = gold(&["a", "b", "c", "d", "e", "f", "g"]);
        assert_eq!(recall_at_k(&["a", "b", "c", "z"], &seven, 3, RecallMode::SetRecall), 3.0 / 7.0);
        assert_eq!(recall_at_k(&["a", "z"], &seven, 1, RecallMode::HitRate), 1.0);
    }

    #[test]
    fn ranking_collapses_duplicates() {
        let mut reg = ReferenceRegistry::new();
        let r1 = reg.allocate("docA", "q");
        let r2 = reg.allocate("docB", "q");
        let r3 = reg.allocate("docA", "q");
        let cite = |r, s| Citation {
            ref_id: r,
            doc_id: String::new(),
            relevancy_score: s,
        };
        assert_eq!(rank_documents(&[cite(r2, 0.9), cite(r1, 0.6)], &reg), ["docB", "docA"]);
        assert_eq!(rank_documents(&[cite(r1, 0.9), cite(r2, 0.5), cite(r3, 0.1)], &reg), ["docA", "docB"]);
        assert!(rank_documents(&[], &reg).is_empty());
    }

    #[test]
    fn stderr_conventions() {
        assert_eq!(mean_stderr(&[5.0]), MeanStderr { mean: 5.0, stderr: 0.0 });
        let m = mean_stderr(&[2.0, 4.0]);
        assert_eq!(m.mean, 3.0);
        assert!((m.stderr - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn recall_bounded_and_monotone(
            ranking in proptest::collection::vec(0u8..12, 0..15),
            gold_ids in proptest::collection::btree_set(0u8..12, 1..6),
        ) {
            let ranking: Vec<String> = ranking.iter().map(|i| format!("d{i}")).collect();
            let gold_s: Vec<String> = gold_ids.iter().map(|i| format!("d{i}")).collect();
            let g: BTreeSet<&str> = gold_s.iter().map(String::as_str).collect();
            for mode in [RecallMode::SetRecall, RecallMode::HitRate] {
                let mut prev = 0.0;
                for k in 1..=16 {
                    let r = recall_at_k(&ranking, &g, k, mode);
                    prop_assert!((0.0..=1.0).contains(&r));
                    prop_assert!(r >= prev);
                    prev = r;
                }
                if g.iter().all(|d| ranking.iter().any(|x| x == d)) {
                    prop_assert_eq!(recall_at_k(&ranking, &g, ranking.len().max(1), mode), 1.0);
                }
            }
        }
    }
}
