//! Turning user input into code units: single files, directory trees and
//! remote repositories, plus line-aligned chunking for oversized units.

mod chunk;
mod directory;
mod repo;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::ErrorKind;
use crate::runtime::Transient;

pub use chunk::{chunk_unit, Chunk, ChunkError};
pub use directory::{enumerate_directory, load_file, DirectoryListing, SkipReason, SkippedFile};
pub use repo::{fetch_repository, RepoClient, RepoClientConfig, RepoFetch, RepoMetadata};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoLocator {
    pub host: String,
    pub owner: String,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    File,
    Directory,
    RepoUrl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    File(PathBuf),
    Directory(PathBuf),
    Repository {
        repo: RepoLocator,
        reference: Option<String>,
    },
}

impl SourceSpec {
    pub fn modality(&self) -> Modality {
        match self {
            SourceSpec::File(_) => Modality::File,
            SourceSpec::Directory(_) => Modality::Directory,
            SourceSpec::Repository { .. } => Modality::RepoUrl,
        }
    }
    /// Location-independent label: the last path component for local inputs.
    pub fn display_name(&self) -> String {
        match self {
            SourceSpec::File(p) | SourceSpec::Directory(p) => p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            SourceSpec::Repository { .. } => self.to_string(),
        }
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::File(p) | SourceSpec::Directory(p) => write!(f, "{}", p.display()),
            SourceSpec::Repository { repo, reference } => {
                write!(f, "{}/{}/{}", repo.host, repo.owner, repo.name)?;
                if let Some(r) = reference {
                    write!(f, "@{r}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeUnit {
    /// Forward-slash path relative to the input root.
    pub rel_path: String,
    pub content: String,
    pub line_count: usize,
    pub byte_size: usize,
    pub language_tag: String,
}

impl CodeUnit {
    pub fn new(rel_path: impl Into<String>, content: impl Into<String>) -> Self {
        let rel_path = rel_path.into();
        let content = content.into();
        Self {
            line_count: content.lines().count(),
            byte_size: content.len(),
            language_tag: language_for(&rel_path).to_string(),
            rel_path,
            content,
        }
    }
}

pub fn language_for(path: &str) -> &'static str {
    let ext = Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "py" | "pyi" => "python",
        "rs" => "rust",
        "js" | "mjs" | "cjs" => "javascript",
        "ts" => "typescript",
        "go" => "go",
        "java" => "java",
        "rb" => "ruby",
        "c" | "h" => "c",
        "cc" | "cpp" | "hpp" | "cxx" => "cpp",
        "sh" => "bash",
        _ => "text",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestOptions {
    /// Extensions with their leading dot, e.g. `.py`.
    pub extensions: Vec<String>,
    /// Directory names skipped at any depth.
    pub ignore: Vec<String>,
    pub skip_hidden: bool,
    pub max_file_bytes: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            extensions: vec![".py".into()],
            ignore: [
                "__pycache__",
                "venv",
                ".venv",
                "env",
                ".tox",
                "node_modules",
                "site-packages",
                ".git",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            skip_hidden: true,
            max_file_bytes: 1024 * 1024,
        }
    }
}

impl IngestOptions {
    pub fn matches_extension(&self, path: &str) -> bool {
        let lower = path.to_ascii_lowercase();
        self.extensions
            .iter()
            .any(|ext| lower.ends_with(&ext.to_ascii_lowercase()))
    }

    /// Whether a directory component excludes everything beneath it.
    pub fn ignores_dir(&self, name: &str) -> bool {
        (self.skip_hidden && name.starts_with('.') && name.len() > 1 && name != "..")
            || self.ignore.iter().any(|i| i == name)
    }

    /// Applies the directory rules to every parent component of `rel_path`.
    pub fn ignores_path(&self, rel_path: &str) -> bool {
        let mut parts: Vec<&str> = rel_path.split('/').collect();
        parts.pop();
        parts.iter().any(|p| self.ignores_dir(p))
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is empty")]
    EmptyInput,
    #[error("no such file or directory: {0}")]
    NotFound(PathBuf),
    #[error("unsupported repository host `{0}`")]
    UnsupportedHost(String),
    #[error("not a repository URL: {0}")]
    InvalidRepoUrl(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not valid UTF-8")]
    NotUtf8(PathBuf),
    #[error("{0}: looks like a binary file")]
    Binary(PathBuf),
    #[error("{path}: {bytes} bytes exceeds the size cap")]
    TooLarge { path: PathBuf, bytes: u64 },
    #[error("{}", describe_http(*status, detail, *rate_limit_reset))]
    Http {
        status: Option<u16>,
        detail: String,
        kind: ErrorKind,
        /// Epoch seconds at which the rate-limit window resets.
        rate_limit_reset: Option<u64>,
    },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: u32,
        last: Box<IngestError>,
    },
}

fn describe_http(status: Option<u16>, detail: &str, reset: Option<u64>) -> String {
    let mut s = match status {
        Some(code) => format!("repository API returned HTTP {code}: {detail}"),
        None => format!("repository API request failed: {detail}"),
    };
    if let Some(reset) = reset {
        s.push_str(&format!(" (rate limit resets at {reset})"));
    }
    s
}

impl Transient for IngestError {
    fn is_transient(&self) -> bool {
        matches!(
            self,
            IngestError::Http {
                kind: ErrorKind::Transient,
                ..
            }
        )
    }
}

/// Classify raw user input as a repository URL, directory or file.
pub fn resolve_input(raw: &str) -> Result<SourceSpec, IngestError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    if raw.contains("://") {
        return parse_repo_url(raw);
    }
    let path = PathBuf::from(raw);
    match std::fs::metadata(&path) {
        Ok(meta) if meta.is_dir() => Ok(SourceSpec::Directory(path)),
        Ok(_) => Ok(SourceSpec::File(path)),
        Err(_) => Err(IngestError::NotFound(path)),
    }
}

fn parse_repo_url(raw: &str) -> Result<SourceSpec, IngestError> {
    let url = url::Url::parse(raw).map_err(|_| IngestError::InvalidRepoUrl(raw.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(IngestError::InvalidRepoUrl(raw.to_string()));
    }
    let host = url.host_str().unwrap_or_default().to_ascii_lowercase();
    if host != "github.com" && host != "www.github.com" {
        return Err(IngestError::UnsupportedHost(host));
    }
    let segments: Vec<&str> = url
        .path_segments()
        .map(|s| s.filter(|p| !p.is_empty()).collect())
        .unwrap_or_default();
    let (owner, name) = match segments.as_slice() {
        [owner, name, ..] => (*owner, name.trim_end_matches(".git")),
        _ => return Err(IngestError::InvalidRepoUrl(raw.to_string())),
    };
    if owner.is_empty() || name.is_empty() {
        return Err(IngestError::InvalidRepoUrl(raw.to_string()));
    }
    let reference = match segments.get(2..) {
        Some(["tree" | "commit", rest @ ..]) if !rest.is_empty() => Some(rest.join("/")),
        Some([]) | None => None,
        Some(_) => return Err(IngestError::InvalidRepoUrl(raw.to_string())),
    };
    Ok(SourceSpec::Repository {
        repo: RepoLocator {
            host: "github.com".into(),
            owner: owner.to_string(),
            name: name.to_string(),
        },
        reference,
    })
}
