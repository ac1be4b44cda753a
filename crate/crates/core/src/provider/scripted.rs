use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FinishReason, ModelProvider, ModelResponse, PromptRequest, ProviderError, Usage};

/// One line of a fixture file.
///
/// A record carries either `response` (canned text) or `error` (an injected
/// failure, classified from `status` and the message). Error records fire on
/// every call unless `times` bounds them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub agent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<u32>,
}

impl FixtureEntry {
    pub fn response(agent: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            agent: agent.into(),
            digest: None,
            response: Some(text.into()),
            error: None,
            status: None,
            times: None,
        }
    }

    pub fn failure(
        agent: impl Into<String>,
        status: Option<u16>,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            agent: agent.into(),
            digest: None,
            response: None,
            error: Some(detail.into()),
            status,
            times: None,
        }
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.digest = Some(digest.into());
        self
    }

    pub fn with_times(mut self, times: u32) -> Self {
        self.times = Some(times);
        self
    }

    fn digest_matches(&self, digest: &str) -> bool {
        match &self.digest {
            Some(d) => !d.is_empty() && digest.starts_with(d.as_str()),
            None => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("fixture line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("fixture line {line}: record needs exactly one of `response` or `error`")]
    Shape { line: usize },
}

/// Deterministic provider that replays canned responses from a fixture table.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    entries: Vec<FixtureEntry>,
    remaining_failures: Mutex<BTreeMap<usize, u32>>,
    calls: Mutex<BTreeMap<String, u32>>,
    delays: BTreeMap<String, Duration>,
}

impl ScriptedProvider {
    pub fn new(entries: Vec<FixtureEntry>) -> Self {
        let remaining = entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.times.map(|t| (i, t)))
            .collect();
        Self {
            entries,
            remaining_failures: Mutex::new(remaining),
            calls: Mutex::default(),
            delays: BTreeMap::new(),
        }
    }

    /// Parse line-delimited JSON records. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry: FixtureEntry =
                serde_json::from_str(line).map_err(|source| FixtureError::Parse {
                    line: idx + 1,
                    source,
                })?;
            if entry.response.is_some() == entry.error.is_some() {
                return Err(FixtureError::Shape { line: idx + 1 });
            }
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Serialize entries back to the line-delimited format.
    pub fn to_jsonl(entries: &[FixtureEntry]) -> String {
        entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("fixture entries always serialize") + "\n")
            .collect()
    }

    /// Real (blocking) delay applied before answering for `agent`.
    pub fn with_delay(mut self, agent: impl Into<String>, delay: Duration) -> Self {
        self.delays.insert(agent.into(), delay);
        self
    }

    pub fn entries(&self) -> &[FixtureEntry] {
        &self.entries
    }

    /// Number of `generate` calls received for `agent`.
    pub fn calls(&self, agent: &str) -> u32 {
        self.calls
            .lock()
            .expect("call counter poisoned")
            .get(agent)
            .copied()
            .unwrap_or(0)
    }

    pub fn total_calls(&self) -> u32 {
        self.calls
            .lock()
            .expect("call counter poisoned")
            .values()
            .sum()
    }

    /// Canned text for `agent`: a digest-refined record wins over a plain one.
    pub fn scripted_lookup(&self, agent: &str, digest: &str) -> Result<&str, ProviderError> {
        let candidates = || {
            self.entries
                .iter()
                .filter(move |e| e.agent == agent)
                .filter_map(|e| e.response.as_deref().map(|r| (e, r)))
        };
        candidates()
            .find(|(e, _)| e.digest_matches(digest))
            .or_else(|| candidates().find(|(e, _)| e.digest.is_none()))
            .map(|(_, text)| text)
            .ok_or_else(|| {
                ProviderError::new(None, format!("no scripted response for agent `{agent}`"))
            })
    }

    fn injected_failure(&self, agent: &str, digest: &str) -> Option<ProviderError> {
        let mut remaining = self
            .remaining_failures
            .lock()
            .expect("failure table poisoned");
        for (idx, entry) in self.entries.iter().enumerate() {
            let Some(detail) = &entry.error else { continue };
            if entry.agent != agent || (entry.digest.is_some() && !entry.digest_matches(digest)) {
                continue;
            }
            match remaining.get_mut(&idx) {
                Some(0) => continue,
                Some(left) => *left -= 1,
                None => {}
            }
            return Some(ProviderError::new(entry.status, detail.clone()));
        }
        None
    }
}

impl ModelProvider for ScriptedProvider {
    fn generate(&self, req: &PromptRequest) -> Result<ModelResponse, ProviderError> {
        *self
            .calls
            .lock()
            .expect("call counter poisoned")
            .entry(req.agent_name.clone())
            .or_default() += 1;
        if let Some(delay) = self.delays.get(&req.agent_name) {
            std::thread::sleep(*delay);
        }
        let digest = req.content_digest();
        if let Some(err) = self.injected_failure(&req.agent_name, &digest) {
            return Err(err);
        }
        let text = self.scripted_lookup(&req.agent_name, &digest)?;
        let (text, finish_reason) = if text.chars().count() > req.max_output_chars {
            (
                text.chars().take(req.max_output_chars).collect(),
                FinishReason::Truncated,
            )
        } else {
            (text.to_string(), FinishReason::Complete)
        };
        Ok(ModelResponse {
            usage: Usage::estimate(&req.user_content, &text),
            text,
            finish_reason,
        })
    }
}
