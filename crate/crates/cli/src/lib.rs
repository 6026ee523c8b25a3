//! Command-line front end: `index`, `ask`, `eval` and `report`.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use agentic_rag::agent::http::HttpClient;
use agentic_rag::agent::prompt::SYSTEM_PROMPT_VERSION;
use agentic_rag::agent::{AgentAnswer, ModelClient, ScriptBook, ScriptedClient, Session};
use agentic_rag::corpus::{ingest_directory, CorpusManifest};
use agentic_rag::eval::{
    build_report, load_queries, output, render_ablation_table, run_batch, validate_queries, AblationRow, Baseline,
    EvalReport, QueryRecord, RunMode, RunSettings, ABLATION_COLUMNS,
};
use agentic_rag::search::{LexicalBackend, SearchBackend};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

pub use config::{BackendConfig, ClientKind, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "agentic-rag", version, about = "Agentic retrieval over a local document corpus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a corpus directory and print its manifest and statistics.
    Index(IndexArgs),
    /// Answer one question and write its transcript.
    Ask(AskArgs),
    /// Run every query of a query set and write reports.
    Eval(RunArgs),
    /// Collect labelled runs into an ablation table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Write the manifest here instead of standard output.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Flags shared by `ask` and `eval`. Each one, when given, overrides the
/// config file, which overrides the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub client: Option<ClientKind>,
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub single_shot: bool,
    #[arg(long)]
    pub no_multi_query: bool,
    #[arg(long)]
    pub no_summarize: bool,
    #[arg(long)]
    pub no_semantic_find: bool,
    #[arg(long)]
    pub max_calls: Option<usize>,
    #[arg(long)]
    pub token_threshold: Option<usize>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub baseline_label: Option<String>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Transcript path; defaults to `<out>/<label>/ask_transcript.jsonl`.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Script-book key to use with the scripted client.
    #[arg(long)]
    pub query_id: Option<String>,
    pub query: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory containing one subdirectory per labelled run.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Comma-separated labels in row order; defaults to every run found.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
}

impl RunArgs {
    /// Loads the config file (if any) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        self.apply(&mut c);
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&self, c: &mut RunConfig) {
        if let Some(v) = &self.corpus {
            c.corpus = Some(v.clone());
        }
        if let Some(v) = &self.queries {
            c.queries = Some(v.clone());
        }
        if let Some(v) = self.client {
            c.client = v;
        }
        if let Some(v) = &self.script {
            c.script = Some(v.clone());
        }
        if self.single_shot {
            c.single_shot = true;
        }
        if self.no_multi_query {
            c.agent.multi_query_enabled = false;
        }
        if self.no_summarize {
            c.agent.summarize_enabled = false;
        }
        if self.no_semantic_find {
            c.agent.semantic_find_enabled = false;
        }
        if let Some(v) = self.max_calls {
            c.agent.max_calls = v;
        }
        if let Some(v) = self.token_threshold {
            c.agent.token_threshold = v;
        }
        if let Some(v) = self.jobs {
            c.jobs = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = &self.label {
            c.label = v.clone();
        }
        if let Some(v) = &self.baseline_label {
            c.baseline_label = Some(v.clone());
        }
    }
}

/// What a command printed and whether it recorded an error.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub failed: bool,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Index(a) => cmd_index(&a),
        Command::Ask(a) => cmd_ask(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn load_corpus(config: &RunConfig) -> Result<Arc<CorpusManifest>> {
    let dir = config.corpus.as_ref().ok_or_else(|| anyhow!("no corpus directory given (--corpus)"))?;
    let (manifest, warnings) = ingest_directory(dir, &config.extensions, config.agent.token_counter)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(Arc::new(manifest))
}

fn build_backend(config: &RunConfig, corpus: &Arc<CorpusManifest>) -> Result<Arc<dyn SearchBackend>> {
    let backend = LexicalBackend::with_params(corpus.clone(), config.backend.params())?
        .with_snippet_chars(config.backend.snippet_chars);
    Ok(Arc::new(backend))
}

struct ClientSource {
    kind: ClientKind,
    book: Option<ScriptBook>,
    config: RunConfig,
}

impl ClientSource {
    fn new(config: &RunConfig) -> Result<Self> {
        let book = match config.client {
            ClientKind::Scripted => {
                let path = config
                    .script
                    .as_ref()
                    .ok_or_else(|| anyhow!("the scripted client needs --script"))?;
                Some(ScriptBook::load(path)?)
            }
            ClientKind::Http => None,
        };
        Ok(ClientSource {
            kind: config.client,
            book,
            config: config.clone(),
        })
    }

    fn make(&self, query_id: Option<&str>, query: &str) -> Result<Box<dyn ModelClient>, String> {
        match self.kind {
            ClientKind::Scripted => {
                let book = self.book.as_ref().expect("scripted source has a book");
                let script = book
                    .lookup(query_id, query)
                    .ok_or_else(|| format!("no script for query {}", query_id.unwrap_or(query)))?;
                Ok(Box::new(ScriptedClient::new(script.clone())))
            }
            ClientKind::Http => HttpClient::new(self.config.http.clone())
                .map(|c| Box::new(c) as Box<dyn ModelClient>)
                .map_err(|e| e.to_string()),
        }
    }
}

pub fn cmd_index(args: &IndexArgs) -> Result<Outcome> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &args.corpus {
        config.corpus = Some(c.clone());
    }
    let corpus = load_corpus(&config)?;
    // building the index validates that there is something to search
    build_backend(&config, &corpus)?;
    let manifest = corpus.to_manifest_json()?;
    let stats = corpus.stats();
    let mut stdout = String::new();
    match &args.manifest {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, &manifest).with_context(|| format!("writing {}", path.display()))?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(stats)?)?;
        }
        None => stdout.push_str(&manifest),
    }
    Ok(Outcome { stdout, failed: false })
}

pub fn render_answer(answer: &AgentAnswer) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", answer.text.trim_end());
    let _ = writeln!(out, "\nCitations:");
    if answer.citations.is_empty() {
        let _ = writeln!(out, "  (none)");
    }
    for c in &answer.citations {
        let _ = writeln!(out, "  [{}] {} (relevancy {:.2})", c.ref_id, c.doc_id, c.relevancy_score);
    }
    let s = &answer.stats;
    let t = &s.tools;
    let _ = writeln!(out, "\nStats:");
    let _ = writeln!(
        out,
        "  iterations {} | model calls {} | tools {} (search {}, find {}, open {}, summarize {}, invalid {})",
        s.iterations_used,
        s.model_calls,
        t.total(),
        t.search,
        t.find,
        t.open,
        t.summarize,
        t.invalid
    );
    let _ = writeln!(
        out,
        "  tokens {} (context at end {}) | forced completion {}",
        s.total_tokens, s.final_context_tokens, s.forced_completion
    );
    if !s.dropped_citations.is_empty() {
        let _ = writeln!(out, "  dropped citations: {}", s.dropped_citations.join(", "));
    }
    if let Some(reason) = &s.aborted {
        let _ = writeln!(out, "  aborted: {reason}");
    }
    out
}

pub fn cmd_ask(args: &AskArgs) -> Result<Outcome> {
    let config = args.run.resolve()?;
    let corpus = load_corpus(&config)?;
    let backend = build_backend(&config, &corpus)?;
    let source = ClientSource::new(&config)?;
    let mut client = source.make(args.query_id.as_deref(), &args.query).map_err(|e| anyhow!(e))?;
    let mut session = Session::new(config.agent.clone(), corpus, backend)?;
    let answer = if config.single_shot {
        session.ask_single_shot(client.as_mut(), &args.query)?
    } else {
        session.ask(client.as_mut(), &args.query)?
    };
    let path = args
        .transcript
        .clone()
        .unwrap_or_else(|| config.run_dir(&config.label).join("ask_transcript.jsonl"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, session.conversation().to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
    Ok(Outcome {
        stdout: render_answer(&answer),
        failed: answer.stats.aborted.is_some(),
    })
}

fn read_queries(config: &RunConfig, corpus: &CorpusManifest) -> Result<Vec<QueryRecord>> {
    let path = config.queries.as_ref().ok_or_else(|| anyhow!("no query set given (--queries)"))?;
    let queries = load_queries(path)?;
    validate_queries(&queries, corpus)?;
    Ok(queries)
}

pub fn cmd_eval(args: &RunArgs) -> Result<Outcome> {
    let config = args.resolve()?;
    let corpus = load_corpus(&config)?;
    let queries = read_queries(&config, &corpus)?;
    let backend = build_backend(&config, &corpus)?;
    let source = ClientSource::new(&config)?;
    let mode = if config.single_shot { RunMode::SingleShot } else { RunMode::Agentic };
    let factory = |r: &QueryRecord| source.make(Some(&r.query_id), &r.query);
    let runs = run_batch(&config.agent, &corpus, &backend, &queries, mode, config.jobs, &factory)?;

    let baseline_report = match &config.baseline_label {
        Some(label) => Some(
            output::read_report(&config.run_dir(label))
                .with_context(|| format!("loading baseline run {label}"))?,
        ),
        None => None,
    };
    let settings = RunSettings {
        label: config.label.clone(),
        mode,
        recall_mode: config.recall_mode,
        ks: config.ks.clone(),
        prompt_version: SYSTEM_PROMPT_VERSION.into(),
        agent: config.agent.clone(),
    };
    let baseline = baseline_report.as_ref().map(|b| Baseline {
        label: &b.settings.label,
        per_query: &b.per_query,
    });
    let report = build_report(settings, &runs, baseline)?;
    let dir = config.run_dir(&config.label);
    output::write_run_outputs(&dir, &report, &runs)?;

    let a = &report.aggregates;
    let mut stdout = String::new();
    writeln!(stdout, "run {} ({} queries) -> {}", config.label, a.queries, dir.display())?;
    for (k, m) in &a.recall {
        writeln!(stdout, "  recall@{k}: {:.4} ± {:.4}", m.mean, m.stderr)?;
    }
    writeln!(stdout, "  avg tools: {:.2} ± {:.2}", a.avg_tools.mean, a.avg_tools.stderr)?;
    writeln!(stdout, "  avg total tokens: {:.1}", a.total_tokens.mean)?;
    if let (Some(r), Some(b)) = (a.cost_ratio, &a.baseline_label) {
        writeln!(stdout, "  cost ratio vs {b}: {r:.3}")?;
    }
    if a.aborted > 0 {
        writeln!(stdout, "  aborted queries: {}", a.aborted)?;
    }
    Ok(Outcome {
        stdout,
        failed: a.aborted > 0,
    })
}

fn discover_labels(out: &Path) -> Result<Vec<String>> {
    let mut labels = Vec::new();
    for entry in std::fs::read_dir(out).with_context(|| format!("reading {}", out.display()))? {
        let entry = entry?;
        if entry.path().join(output::REPORT_JSON).is_file() {
            labels.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    labels.sort();
    Ok(labels)
}

pub const ABLATION_CSV: &str = "ablation.csv";

pub fn cmd_report(args: &ReportArgs) -> Result<Outcome> {
    let labels = if args.labels.is_empty() {
        discover_labels(&args.out)?
    } else {
        args.labels.clone()
    };
    if labels.is_empty() {
        bail!("no runs found under {}", args.out.display());
    }
    let reports: Vec<EvalReport> = labels
        .iter()
        .map(|l| output::read_report(&args.out.join(l)).with_context(|| format!("loading run {l}")))
        .collect::<Result<_>>()?;
    let rows: Vec<AblationRow> = reports.iter().map(AblationRow::from_report).collect();
    let mut csv = ABLATION_COLUMNS.join(",");
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.cells().join(","));
        csv.push('\n');
    }
    let path = args.out.join(ABLATION_CSV);
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    Ok(Outcome {
        stdout: render_ablation_table(&rows),
        failed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_config() -> RunConfig {
        RunConfig::from_json(
            r#"{
                "agent": {"max_calls": 7, "token_threshold": 5000, "multi_query_enabled": true,
                          "summarize_enabled": true, "semantic_find_enabled": true},
                "client": "http", "corpus": "file-corpus", "queries": "file.jsonl", "script": "file.json",
                "out": "file-out", "label": "file", "baseline_label": "file-base", "jobs": 3
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn file_beats_default() {
        let mut c = file_config();
        RunArgs::default().apply(&mut c);
        assert_eq!(c, file_config());
        assert_ne!(c.agent, RunConfig::default().agent);
    }

    #[test]
    fn flag_beats_file_per_field() {
        type Case = (RunArgs, fn(&RunConfig) -> bool);
        let cases: Vec<Case> = vec![
            (RunArgs { corpus: Some("flag".into()), ..Default::default() }, |c| c.corpus == Some("flag".into())),
            (RunArgs { queries: Some("flag".into()), ..Default::default() }, |c| c.queries == Some("flag".into())),
            (RunArgs { client: Some(ClientKind::Scripted), ..Default::default() }, |c| c.client == ClientKind::Scripted),
            (RunArgs { script: Some("flag".into()), ..Default::default() }, |c| c.script == Some("flag".into())),
            (RunArgs { single_shot: true, ..Default::default() }, |c| c.single_shot),
            (RunArgs { no_multi_query: true, ..Default::default() }, |c| !c.agent.multi_query_enabled),
            (RunArgs { no_summarize: true, ..Default::default() }, |c| !c.agent.summarize_enabled),
            (RunArgs { no_semantic_find: true, ..Default::default() }, |c| !c.agent.semantic_find_enabled),
            (RunArgs { max_calls: Some(2), ..Default::default() }, |c| c.agent.max_calls == 2),
            (RunArgs { token_threshold: Some(99), ..Default::default() }, |c| c.agent.token_threshold == 99),
            (RunArgs { jobs: Some(8), ..Default::default() }, |c| c.jobs == 8),
            (RunArgs { out: Some("flag".into()), ..Default::default() }, |c| c.out == Path::new("flag")),
            (RunArgs { label: Some("flag".into()), ..Default::default() }, |c| c.label == "flag"),
            (RunArgs { baseline_label: Some("flag".into()), ..Default::default() }, |c| {
                c.baseline_label.as_deref() == Some("flag")
            }),
        ];
        for (i, (args, check)) in cases.into_iter().enumerate() {
            let mut c = file_config();
            assert!(!check(&c), "case {i} already holds in the file");
            args.apply(&mut c);
            assert!(check(&c), "case {i}: flag did not win");
            // and every other field keeps its file value
            let mut expected = file_config();
            args.apply(&mut expected);
            assert_eq!(c, expected);
        }
    }

    #[test]
    fn flags_beat_defaults() {
        let mut c = RunConfig::default();
        RunArgs {
            no_summarize: true,
            max_calls: Some(3),
            ..Default::default()
        }
        .apply(&mut c);
        assert!(!c.agent.summarize_enabled);
        assert_eq!(c.agent.max_calls, 3);
        assert_eq!(c.agent.token_threshold, 128_000);
    }

    #[test]
    fn parses_command_line() {
        let cli = Cli::try_parse_from([
            "agentic-rag", "eval", "--corpus", "c", "--queries", "q.jsonl", "--client", "scripted", "--script", "s.json",
            "--no-multi-query", "--max-calls", "4", "--jobs", "2", "--label", "x",
        ])
        .unwrap();
        let Command::Eval(args) = cli.command else { panic!() };
        let c = args.resolve().unwrap();
        assert_eq!((c.agent.max_calls, c.jobs, c.label.as_str()), (4, 2, "x"));
        assert!(!c.agent.multi_query_enabled);
        assert!(Cli::try_parse_from(["agentic-rag", "eval", "--max-calls", "0"])
            .map(|c| match c.command {
                Command::Eval(a) => a.resolve().is_err(),
                _ => false,
            })
            .unwrap());
    }
}
