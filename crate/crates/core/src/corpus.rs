//! Line-addressed, token-counted in-memory corpus.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::tokens::TokenCounter;

const TITLE_MAX_CHARS: usize = 120;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no documents: no files matching {extensions:?} under {root}")]
    NoDocuments { root: PathBuf, extensions: Vec<String> },
    #[error("corpus root {path} is not readable: {source}")]
    Root { path: PathBuf, source: io::Error },
    #[error("at least one file extension is required")]
    NoExtensions,
    #[error("document not found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A single text file, split into lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub filename: String,
    pub file_type: String,
    pub lines: Vec<String>,
    pub total_lines: usize,
    pub token_count: usize,
}

impl Document {
    /// Builds a document from raw file text. `\r\n` is normalized to `\n` and
    /// a single trailing newline is dropped before splitting.
    pub fn from_text(doc_id: &str, filename: &str, text: &str, counter: TokenCounter) -> Self {
        let normalized = text.replace("\r\n", "\n");
        let body = normalized.strip_suffix('\n').unwrap_or(&normalized);
        let lines: Vec<String> = if body.is_empty() && normalized.is_empty() {
            Vec::new()
        } else {
            body.split('\n').map(str::to_owned).collect()
        };
        let title = extract_title(&lines).unwrap_or_else(|| filename.to_owned());
        let file_type = Path::new(filename)
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let token_count = counter.count(&lines.join("\n"));
        Document {
            doc_id: doc_id.to_owned(),
            title,
            filename: filename.to_owned(),
            file_type,
            total_lines: lines.len(),
            lines,
            token_count,
        }
    }

    pub fn text(&self) -> String {
        self.lines.join("\n")
    }
}

fn extract_title(lines: &[String]) -> Option<String> {
    let line = lines.iter().map(|l| l.trim()).find(|l| !l.is_empty())?;
    let stripped = line.trim_start_matches('#').trim();
    let stripped = if stripped.is_empty() { line } else { stripped };
    Some(stripped.chars().take(TITLE_MAX_CHARS).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub total_tokens: usize,
    pub avg_doc_tokens: f64,
}

impl CorpusStats {
    pub fn compute(documents: &[Document]) -> Self {
        let doc_count = documents.len();
        let total_tokens: usize = documents.iter().map(|d| d.token_count).sum();
        let avg_doc_tokens = if doc_count == 0 {
            0.0
        } else {
            total_tokens as f64 / doc_count as f64
        };
        CorpusStats {
            doc_count,
            total_tokens,
            avg_doc_tokens,
        }
    }
}

/// The ingested corpus. Documents are kept sorted by `doc_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    documents: Vec<Document>,
    stats: CorpusStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestWarning {
    pub path: PathBuf,
    pub reason: String,
}

impl std::fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "skipped {}: {}", self.path.display(), self.reason)
    }
}

impl CorpusManifest {
    /// Builds a manifest from documents. Duplicate doc ids keep the first.
    pub fn from_documents(mut documents: Vec<Document>) -> Self {
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        documents.dedup_by(|b, a| a.doc_id == b.doc_id);
        let stats = CorpusStats::compute(&documents);
        CorpusManifest { documents, stats }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get_document(&self, doc_id: &str) -> Result<&Document, CorpusError> {
        self.documents
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .map(|i| &self.documents[i])
            .map_err(|_| CorpusError::NotFound(doc_id.to_owned()))
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.get_document(doc_id).is_ok()
    }

    /// Serializes document metadata (no line content) and stats.
    pub fn to_manifest_json(&self) -> Result<String, CorpusError> {
        #[derive(Serialize)]
        struct Entry<'a> {
            doc_id: &'a str,
            title: &'a str,
            filename: &'a str,
            file_type: &'a str,
            total_lines: usize,
            token_count: usize,
        }
        #[derive(Serialize)]
        struct ManifestFile<'a> {
            corpus_stats: &'a CorpusStats,
            documents: Vec<Entry<'a>>,
        }
        let file = ManifestFile {
            corpus_stats: &self.stats,
            documents: self
                .documents
                .iter()
                .map(|d| Entry {
                    doc_id: &d.doc_id,
                    title: &d.title,
                    filename: &d.filename,
                    file_type: &d.file_type,
                    total_lines: d.total_lines,
                    token_count: d.token_count,
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file)?;
        out.push('\n');
        Ok(out)
    }
}

pub const DEFAULT_EXTENSIONS: &[&str] = &["txt", "md"];

/// Walks `root` and loads every file whose extension (case-insensitive) is in
/// `extensions`. Unreadable or non-UTF-8 files are skipped with a warning.
pub fn ingest_directory<S: AsRef<str>>(
    root: &Path,
    extensions: &[S],
    counter: TokenCounter,
) -> Result<(CorpusManifest, Vec<IngestWarning>), CorpusError> {
    let wanted: BTreeSet<String> = extensions
        .iter()
        .map(|e| e.as_ref().trim_start_matches('.').to_lowercase())
        .filter(|e| !e.is_empty())
        .collect();
    if wanted.is_empty() {
        return Err(CorpusError::NoExtensions);
    }
    fs::read_dir(root).map_err(|source| CorpusError::Root {
        path: root.to_owned(),
        source,
    })?;

    let mut documents = Vec::new();
    let mut warnings = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                warnings.push(IngestWarning {
                    path: err.path().map(Path::to_owned).unwrap_or_else(|| root.to_owned()),
                    reason: err.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if !wanted.contains(&ext) {
            continue;
        }
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(err) => {
                warnings.push(IngestWarning {
                    path: path.to_owned(),
                    reason: err.to_string(),
                });
                continue;
            }
        };
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(_) => {
                warnings.push(IngestWarning {
                    path: path.to_owned(),
                    reason: "not valid UTF-8".into(),
                });
                continue;
            }
        };
        let rel = path.strip_prefix(root).unwrap_or(path);
        let doc_id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let filename = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| doc_id.clone());
        documents.push(Document::from_text(&doc_id, &filename, &text, counter));
    }

    if documents.is_empty() {
        return Err(CorpusError::NoDocuments {
            root: root.to_owned(),
            extensions: wanted.into_iter().collect(),
        });
    }
    Ok((CorpusManifest::from_documents(documents), warnings))
}
