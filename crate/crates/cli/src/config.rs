use std::path::{Path, PathBuf};

use agentic_rag::agent::http::HttpClientConfig;
use agentic_rag::agent::AgentConfig;
use agentic_rag::eval::{RecallMode, DEFAULT_KS};
use agentic_rag::search::{Bm25Params, DEFAULT_SNIPPET_CHARS};
use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClientKind {
    Http,
    #[default]
    Scripted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Bm25,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub k1: f64,
    pub b: f64,
    pub snippet_chars: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        let p = Bm25Params::default();
        BackendConfig {
            kind: BackendKind::Bm25,
            k1: p.k1,
            b: p.b,
            snippet_chars: DEFAULT_SNIPPET_CHARS,
        }
    }
}

impl BackendConfig {
    pub fn params(&self) -> Bm25Params {
        Bm25Params { k1: self.k1, b: self.b }
    }
}

/// The JSON config file. Every key is optional; unknown keys are errors.
/// Relative paths are taken relative to the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub backend: BackendConfig,
    pub client: ClientKind,
    pub http: HttpClientConfig,
    pub corpus: Option<PathBuf>,
    pub extensions: Vec<String>,
    pub queries: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub out: PathBuf,
    pub label: String,
    pub baseline_label: Option<String>,
    pub jobs: usize,
    pub single_shot: bool,
    pub recall_mode: RecallMode,
    pub ks: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            agent: AgentConfig::default(),
            backend: BackendConfig::default(),
            client: ClientKind::default(),
            http: HttpClientConfig::default(),
            corpus: None,
            extensions: agentic_rag::corpus::DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect(),
            queries: None,
            script: None,
            out: PathBuf::from("runs"),
            label: "run".into(),
            baseline_label: None,
            jobs: 1,
            single_shot: false,
            recall_mode: RecallMode::default(),
            ks: DEFAULT_KS.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            bail!("ks must be a non-empty list of cutoffs >= 1");
        }
        if self.label.trim().is_empty() || self.label.contains(['/', '\\']) {
            bail!("label must be a non-empty name without path separators");
        }
        if !(self.backend.k1 >= 0.0 && (0.0..=1.0).contains(&self.backend.b)) {
            bail!("backend parameters out of range: k1 >= 0, 0 <= b <= 1");
        }
        Ok(())
    }

    /// Directory holding one labelled run's outputs.
    pub fn run_dir(&self, label: &str) -> PathBuf {
        self.out.join(label)
    }
}
