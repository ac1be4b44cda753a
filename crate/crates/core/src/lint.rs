//! External linter adapter: write the code to a temp file, run a
//! JSON-emitting linter on it, and parse the diagnostics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::runtime::Transient;

/// Replaced by the temp file path in [`LinterConfig::args`].
pub const PATH_PLACEHOLDER: &str = "{path}";

/// Highest exit status still meaning "ran fine, findings (maybe) present".
/// Pylint encodes message categories as bits 1..16; 32 is a usage error.
pub const MAX_FINDINGS_STATUS: i32 = 31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinterConfig {
    pub command: String,
    pub args: Vec<String>,
    pub timeout_secs: f64,
    /// Fail the run when the linter cannot be started.
    pub required: bool,
    pub file_suffix: String,
}

impl Default for LinterConfig {
    fn default() -> Self {
        Self {
            command: "pylint".into(),
            args: vec![PATH_PLACEHOLDER.into(), "--output-format=json".into()],
            timeout_secs: 60.0,
            required: false,
            file_suffix: ".py".into(),
        }
    }
}

impl LinterConfig {
    pub fn validate(&self) -> Result<(), LintError> {
        let count: usize = self
            .args
            .iter()
            .map(|a| a.matches(PATH_PLACEHOLDER).count())
            .sum();
        if count != 1 {
            return Err(LintError::Config(format!(
                "args must contain `{PATH_PLACEHOLDER}` exactly once, found {count}"
            )));
        }
        if self.command.trim().is_empty() {
            return Err(LintError::Config("command is empty".into()));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(LintError::Config(format!(
                "timeout must be positive, got {}",
                self.timeout_secs
            )));
        }
        Ok(())
    }
}

/// Message categories, declared from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LintCategory {
    Convention,
    Refactor,
    Warning,
    Error,
    Fatal,
}

impl LintCategory {
    pub const ALL: [LintCategory; 5] = [
        LintCategory::Fatal,
        LintCategory::Error,
        LintCategory::Warning,
        LintCategory::Refactor,
        LintCategory::Convention,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "convention" => LintCategory::Convention,
            "refactor" => LintCategory::Refactor,
            "warning" => LintCategory::Warning,
            "error" => LintCategory::Error,
            "fatal" => LintCategory::Fatal,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LintCategory::Convention => "convention",
            LintCategory::Refactor => "refactor",
            LintCategory::Warning => "warning",
            LintCategory::Error => "error",
            LintCategory::Fatal => "fatal",
        }
    }
}

impl fmt::Display for LintCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintDiagnostic {
    pub path: String,
    /// 1-based.
    pub line: usize,
    /// 0-based.
    pub column: usize,
    pub code: String,
    pub symbol: String,
    pub category: LintCategory,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LintResult {
    Diagnostics(Vec<LintDiagnostic>),
    /// Linter output that was not parseable JSON, kept verbatim.
    RawFallback(String),
    Unavailable {
        reason: String,
    },
}

impl LintResult {
    pub fn linter_available(&self) -> bool {
        !matches!(self, LintResult::Unavailable { .. })
    }

    pub fn diagnostics(&self) -> &[LintDiagnostic] {
        match self {
            LintResult::Diagnostics(d) => d,
            _ => &[],
        }
    }

    pub fn raw_fallback(&self) -> Option<&str> {
        match self {
            LintResult::RawFallback(raw) => Some(raw),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LintError {
    #[error("invalid linter configuration: {0}")]
    Config(String),
    #[error("no code to lint")]
    EmptyCode,
    #[error("linter `{command}` is unavailable: {reason}")]
    Unavailable { command: String, reason: String },
    #[error("linter timed out after {0:?}")]
    Timeout(Duration),
    #[error("linter exited with status {status:?}: {stderr}")]
    Failed { status: Option<i32>, stderr: String },
    #[error("linter I/O failed: {0}")]
    Io(#[from] std::io::Error),
}

impl Transient for LintError {
    fn is_transient(&self) -> bool {
        matches!(self, LintError::Timeout(_))
    }
}

/// Run the configured linter over `code`.
///
/// The temp file is removed before returning on every path.
pub fn run_linter(code: &str, cfg: &LinterConfig) -> Result<LintResult, LintError> {
    cfg.validate()?;
    if code.trim().is_empty() {
        return Err(LintError::EmptyCode);
    }
    let mut file = tempfile::Builder::new()
        .prefix("codeassay-lint-")
        .suffix(&cfg.file_suffix)
        .tempfile()?;
    file.write_all(code.as_bytes())?;
    file.flush()?;
    let path = file.into_temp_path();
    let path_str = path.to_string_lossy().into_owned();
    let args: Vec<String> = cfg
        .args
        .iter()
        .map(|a| a.replace(PATH_PLACEHOLDER, &path_str))
        .collect();

    let spawned = Command::new(&cfg.command)
        .args(&args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn();
    let mut child = match spawned {
        Ok(child) => child,
        Err(e)
            if matches!(
                e.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied
            ) =>
        {
            let reason = e.to_string();
            if cfg.required {
                return Err(LintError::Unavailable {
                    command: cfg.command.clone(),
                    reason,
                });
            }
            return Ok(LintResult::Unavailable { reason });
        }
        Err(e) => return Err(e.into()),
    };

    let stdout_reader = spawn_reader(child.stdout.take());
    let stderr_reader = spawn_reader(child.stderr.take());
    let timeout = Duration::from_secs_f64(cfg.timeout_secs);
    let deadline = Instant::now() + timeout;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(LintError::Timeout(timeout));
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let stdout = stdout_reader.join().unwrap_or_default();
    let stderr = stderr_reader.join().unwrap_or_default();
    drop(path);

    match status.code() {
        Some(code) if (0..=MAX_FINDINGS_STATUS).contains(&code) => {}
        other => {
            return Err(LintError::Failed {
                status: other,
                stderr: String::from_utf8_lossy(&stderr).chars().take(500).collect(),
            })
        }
    }
    let stdout = String::from_utf8_lossy(&stdout).into_owned();
    if stdout.trim().is_empty() {
        return Ok(LintResult::Diagnostics(Vec::new()));
    }
    Ok(match parse_diagnostics(&stdout) {
        Ok(diagnostics) => LintResult::Diagnostics(diagnostics),
        Err(_) => LintResult::RawFallback(stdout),
    })
}

fn spawn_reader<R: Read + Send + 'static>(source: Option<R>) -> std::thread::JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut source) = source {
            let _ = source.read_to_end(&mut buf);
        }
        buf
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("linter output is not a JSON diagnostics list: {0}")]
pub struct ParseFailure(pub String);

/// Map JSON linter output to diagnostics.
///
/// Accepts a top-level array or an object with a `messages` array. Records
/// that are not objects are skipped; missing fields get defaults; unknown
/// categories become warnings with the original name kept in the message.
pub fn parse_diagnostics(json_text: &str) -> Result<Vec<LintDiagnostic>, ParseFailure> {
    let value: Value = serde_json::from_str(json_text).map_err(|e| ParseFailure(e.to_string()))?;
    let records = match &value {
        Value::Array(items) => items,
        Value::Object(map) => match map.get("messages") {
            Some(Value::Array(items)) => items,
            _ => return Err(ParseFailure("object without a `messages` array".into())),
        },
        _ => return Err(ParseFailure("expected an array".into())),
    };
    Ok(records.iter().filter_map(diagnostic_from).collect())
}

fn diagnostic_from(record: &Value) -> Option<LintDiagnostic> {
    let obj = record.as_object()?;
    let text = |keys: &[&str]| {
        keys.iter()
            .find_map(|k| obj.get(*k).and_then(Value::as_str))
            .unwrap_or("")
            .to_string()
    };
    let number = |key: &str| obj.get(key).and_then(Value::as_u64).map(|n| n as usize);
    let raw_category = text(&["type", "category"]);
    let mut message = text(&["message"]);
    let category = LintCategory::parse(&raw_category).unwrap_or_else(|| {
        if !raw_category.is_empty() {
            message = format!("[{raw_category}] {message}");
        }
        LintCategory::Warning
    });
    Some(LintDiagnostic {
        path: text(&["path", "filename"]),
        line: number("line").unwrap_or(1).max(1),
        column: number("column").unwrap_or(0),
        code: text(&["message-id", "messageId", "code"]),
        symbol: text(&["symbol"]),
        category,
        message,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintSummary {
    /// One entry per category, zeros included.
    pub counts: BTreeMap<LintCategory, usize>,
    /// Most severe first; ties keep input order.
    pub top: Vec<LintDiagnostic>,
    pub total: usize,
}

pub const DEFAULT_TOP_N: usize = 25;

pub fn summarize_diagnostics(diagnostics: &[LintDiagnostic], top_n: usize) -> LintSummary {
    let mut counts: BTreeMap<LintCategory, usize> =
        LintCategory::ALL.iter().map(|c| (*c, 0)).collect();
    for d in diagnostics {
        *counts.entry(d.category).or_default() += 1;
    }
    let mut top = diagnostics.to_vec();
    top.sort_by_key(|d| std::cmp::Reverse(d.category));
    top.truncate(top_n);
    LintSummary {
        counts,
        top,
        total: diagnostics.len(),
    }
}
