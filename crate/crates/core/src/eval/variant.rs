use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;

use super::metrics::MeanStderr;
use super::report::{EvalReport, RunMode};

/// Capability configurations compared in an ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// All tools, multi-query search and semantic find requested.
    Full,
    NoSummarize,
    NoSemanticFind,
    NoMultiQuery,
    SingleShot,
}

impl Variant {
    /// The four agentic variants of the ablation matrix.
    pub const MATRIX: [Variant; 4] = [
        Variant::Full,
        Variant::NoSummarize,
        Variant::NoSemanticFind,
        Variant::NoMultiQuery,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoSummarize => "no-summarize",
            Variant::NoSemanticFind => "no-semantic-find",
            Variant::NoMultiQuery => "no-multi-query",
            Variant::SingleShot => "single-shot",
        }
    }

    pub fn mode(self) -> RunMode {
        match self {
            Variant::SingleShot => RunMode::SingleShot,
            _ => RunMode::Agentic,
        }
    }

    /// `base` with this variant's switches applied. Only `Full` turns
    /// anything on; the others switch one capability off.
    pub fn apply(self, base: &AgentConfig) -> AgentConfig {
        let mut c = base.clone();
        c.semantic_find_enabled = true;
        match self {
            Variant::Full | Variant::SingleShot => {}
            Variant::NoSummarize => c.summarize_enabled = false,
            Variant::NoSemanticFind => c.semantic_find_enabled = false,
            Variant::NoMultiQuery => c.multi_query_enabled = false,
        }
        c
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Variant::Full,
            Variant::NoSummarize,
            Variant::NoSemanticFind,
            Variant::NoMultiQuery,
            Variant::SingleShot,
        ]
        .into_iter()
        .find(|v| v.label() == s)
        .ok_or_else(|| format!("unknown variant: {s}"))
    }
}

/// One row of the ablation table: recall@1, recall@3, then tool usage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub r_at_1: f64,
    pub r_at_3: f64,
    pub avg_tools: MeanStderr,
    pub search: MeanStderr,
    pub open: MeanStderr,
    pub find: MeanStderr,
    /// `None` when summarize was not available to the run.
    pub summarize: Option<MeanStderr>,
}

pub const ABLATION_COLUMNS: [&str; 13] = [
    "variant",
    "r_at_1",
    "r_at_3",
    "avg_tools",
    "avg_tools_stderr",
    "search",
    "search_stderr",
    "open",
    "open_stderr",
    "find",
    "find_stderr",
    "summarize",
    "summarize_stderr",
];

impl AblationRow {
    pub fn from_report(report: &EvalReport) -> Self {
        let a = &report.aggregates;
        let recall = |k| a.recall.get(&k).map_or(f64::NAN, |m| m.mean);
        let summarize_available = report.settings.mode == RunMode::Agentic && report.settings.agent.summarize_enabled;
        AblationRow {
            label: report.settings.label.clone(),
            r_at_1: recall(1),
            r_at_3: recall(3),
            avg_tools: a.avg_tools,
            search: a.search,
            open: a.open,
            find: a.find,
            summarize: summarize_available.then_some(a.summarize),
        }
    }

    /// Cells in [`ABLATION_COLUMNS`] order; unavailable tools show "-".
    pub fn cells(&self) -> Vec<String> {
        let mut out = vec![self.label.clone(), self.r_at_1.to_string(), self.r_at_3.to_string()];
        for m in [self.avg_tools, self.search, self.open, self.find] {
            out.push(m.mean.to_string());
            out.push(m.stderr.to_string());
        }
        match self.summarize {
            Some(m) => {
                out.push(m.mean.to_string());
                out.push(m.stderr.to_string());
            }
            None => out.extend(["-".to_owned(), "-".to_owned()]),
        }
        out
    }
}

/// Fixed-width text rendering with mean ± stderr cells.
pub fn render_ablation_table(rows: &[AblationRow]) -> String {
    let fmt = |m: MeanStderr| format!("{:.2} ± {:.2}", m.mean, m.stderr);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>6} {:>6} {:>14} {:>14} {:>14} {:>14} {:>14}",
        "variant", "R@1", "R@3", "Avg. Tools", "Search", "Open", "Find", "Summ."
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:>6.3} {:>6.3} {:>14} {:>14} {:>14} {:>14} {:>14}",
            r.label,
            r.r_at_1,
            r.r_at_3,
            fmt(r.avg_tools),
            fmt(r.search),
            fmt(r.open),
            fmt(r.find),
            r.summarize.map_or("-".to_owned(), fmt)
        );
    }
    out
}
