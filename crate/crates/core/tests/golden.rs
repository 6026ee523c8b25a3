//! Byte-exact output contracts. Regenerate with `UPDATE_GOLDEN=1 cargo test`.

mod common;

use std::path::PathBuf;

use agentic_rag::agent::AgentConfig;
use agentic_rag::eval::{build_report, output, run_batch, Baseline, RecallMode, RunMode, RunSettings, Variant, DEFAULT_KS};
use agentic_rag::tools::{tool_find, tool_open, tool_schemas, tool_search, tool_summarize, ReferenceRegistry, ToolLimits};

use common::*;

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden {}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(actual, expected, "golden mismatch: {name}");
}

#[test]
fn tool_renderings() {
    let fx = synthetic();
    let limits = ToolLimits::default();
    let mut reg = ReferenceRegistry::new();
    let search = tool_search(&mut reg, fx.backend.as_ref(), &["Who supplied the harbor turbine?", "harbor turbine supplier"], &limits);
    golden("search.txt", &search.rendered_text);
    let gold = reg
        .entries()
        .iter()
        .find(|e| e.doc_id == "harbor-turbine-review.md")
        .unwrap()
        .ref_id
        .to_string();
    let find = tool_find(&reg, &fx.corpus, fx.backend.as_ref(), &gold, &["procurement note", "Section 2", "PROCUREMENT"], true, &limits);
    golden("find.txt", &find.rendered_text);
    let miss = tool_find(&reg, &fx.corpus, fx.backend.as_ref(), &gold, &["invoice", "tender"], false, &limits);
    golden("find_miss.txt", &miss.rendered_text);
    let open = tool_open(&reg, &fx.corpus, &gold, Some(85), &limits);
    golden("open.txt", &open.rendered_text);
    let summary = tool_summarize("Supplier named in the review.", &[gold.as_str(), "turn4search4"], &reg, &limits);
    golden("summarize.txt", &summary.rendered_text);

    let errors = [
        tool_search(&mut reg, fx.backend.as_ref(), &["a", "b", "c", "d", "e", "f"], &limits).rendered_text,
        tool_search(&mut reg, fx.backend.as_ref(), &["zebra"], &limits).rendered_text,
        tool_open(&reg, &fx.corpus, &gold, Some(120), &limits).rendered_text,
        tool_open(&reg, &fx.corpus, "turn9search9", None, &limits).rendered_text,
        tool_find(&reg, &fx.corpus, fx.backend.as_ref(), "nonsense", &["x"], false, &limits).rendered_text,
    ];
    golden("errors.txt", &(errors.join("\n") + "\n"));
}

#[test]
fn tool_schema_wire_format() {
    let schemas: Vec<_> = tool_schemas(&ToolLimits::default()).iter().map(|s| s.to_function_json()).collect();
    golden("schemas.json", &(serde_json::to_string_pretty(&schemas).unwrap() + "\n"));
    let single = ToolLimits {
        multi_query_enabled: false,
        summarize_enabled: false,
        ..ToolLimits::default()
    };
    let schemas: Vec<_> = tool_schemas(&single).iter().map(|s| s.to_function_json()).collect();
    golden("schemas_ablated.json", &(serde_json::to_string_pretty(&schemas).unwrap() + "\n"));
}

#[test]
fn report_formats() {
    let fx = synthetic();
    let settings = |label: &str, mode| RunSettings {
        label: label.into(),
        mode,
        recall_mode: RecallMode::SetRecall,
        ks: DEFAULT_KS.to_vec(),
        prompt_version: "v1".into(),
        agent: AgentConfig::default(),
    };
    let single_factory = |r: &_| book_client(&fx.single_shot, r);
    let agentic_factory = |r: &_| book_client(&fx.agentic, r);
    let config = Variant::NoSemanticFind.apply(&AgentConfig::default());
    let single_runs = run_batch(&config, &fx.corpus, &fx.backend, &fx.queries, RunMode::SingleShot, 1, &single_factory).unwrap();
    let single = build_report(settings("single-shot", RunMode::SingleShot), &single_runs, None).unwrap();
    let runs = run_batch(&config, &fx.corpus, &fx.backend, &fx.queries, RunMode::Agentic, 1, &agentic_factory).unwrap();
    let report = build_report(
        settings("agentic", RunMode::Agentic),
        &runs,
        Some(Baseline {
            label: "single-shot",
            per_query: &single.per_query,
        }),
    )
    .unwrap();
    golden("per_query.csv", &output::per_query_csv(&report).unwrap());
    golden("per_query_single_shot.csv", &output::per_query_csv(&single).unwrap());
    golden("aggregate.json", &(serde_json::to_string_pretty(&report.aggregates).unwrap() + "\n"));
    let first: String = output::transcripts_jsonl(&runs[..1]).unwrap();
    golden("transcript_q01.jsonl", &first);
    golden("judge.jsonl", &output::judge_jsonl(&runs[..2]).unwrap());
}
