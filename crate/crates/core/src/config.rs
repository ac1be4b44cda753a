//! Run configuration: a sectioned TOML file, then `CODEASSAY_<SECTION>__<KEY>`
//! environment overrides, then command-line flags (applied by the caller).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assess::{PromptSettings, SecurityRules};
use crate::ingest::{IngestOptions, RepoClientConfig};
use crate::lint::{LinterConfig, DEFAULT_TOP_N};
use crate::provider::HttpProviderConfig;
use crate::runtime::RetryPolicy;

/// Prefix of environment overrides; `__` separates section from key.
pub const ENV_PREFIX: &str = "CODEASSAY_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Live,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSettings {
    pub mode: ProviderMode,
    pub model_id: Option<String>,
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_output_chars: usize,
    pub timeout_secs: f64,
    /// JSONL fixture file for scripted mode.
    pub fixtures: Option<PathBuf>,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Live,
            model_id: None,
            endpoint: None,
            api_key_env: "GEMINI_API_KEY".into(),
            temperature: 0.2,
            max_output_chars: 8000,
            timeout_secs: 120.0,
            fixtures: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkSettings {
    pub max_chars: usize,
    pub overlap_lines: usize,
}

impl Default for ChunkSettings {
    fn default() -> Self {
        Self {
            max_chars: 24_000,
            overlap_lines: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcurrencySettings {
    /// Units assessed at once.
    pub units: usize,
    /// Repository files downloaded at once.
    pub downloads: usize,
    /// `false` forces every fan-out to run sequentially.
    pub parallel: bool,
}

impl Default for ConcurrencySettings {
    fn default() -> Self {
        Self {
            units: 2,
            downloads: 4,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepositorySettings {
    pub api_base: String,
    /// Name of the environment variable holding an optional token.
    pub token_env: String,
    pub timeout_secs: f64,
    pub max_rate_limit_wait_secs: f64,
}

impl Default for RepositorySettings {
    fn default() -> Self {
        Self {
            api_base: "https://api.github.com".into(),
            token_env: "GITHUB_TOKEN".into(),
            timeout_secs: 30.0,
            max_rate_limit_wait_secs: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Markdown,
    Html,
}

impl OutputFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            OutputFormat::Markdown => "report.md",
            OutputFormat::Html => "report.html",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("codeassay-report"),
            formats: vec![OutputFormat::Markdown, OutputFormat::Html],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptTuning {
    /// Lint messages shown to the correctness assessor.
    pub lint_top_n: usize,
}

impl Default for PromptTuning {
    fn default() -> Self {
        Self {
            lint_top_n: DEFAULT_TOP_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub provider: ProviderSettings,
    pub retry: RetryPolicy,
    pub lint: LinterConfig,
    pub ingest: IngestOptions,
    pub chunking: ChunkSettings,
    pub concurrency: ConcurrencySettings,
    pub repository: RepositorySettings,
    pub output: OutputSettings,
    pub prompt: PromptTuning,
    pub security: SecurityRules,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("environment override {var}: {reason}")]
    Env { var: String, reason: String },
    #[error("`{field}` {reason}")]
    Invalid { field: String, reason: String },
    #[error("`{0}` is required for the live provider")]
    Missing(&'static str),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Parse an override as a TOML value, falling back to a plain string.
fn env_value(raw: &str) -> toml::Value {
    toml::from_str::<BTreeMap<String, toml::Value>>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut m| m.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_env(doc: &mut toml::Table, env: &BTreeMap<String, String>) -> Result<(), ConfigError> {
    for (var, raw) in env {
        let Some(rest) = var.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let Some((section, key)) = rest.split_once("__") else {
            continue;
        };
        let (section, key) = (section.to_ascii_lowercase(), key.to_ascii_lowercase());
        if section.is_empty() || key.is_empty() {
            return Err(ConfigError::Env {
                var: var.clone(),
                reason: "expected CODEASSAY_<SECTION>__<KEY>".into(),
            });
        }
        let table = doc
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError::Env {
                var: var.clone(),
                reason: format!("`{section}` is not a section"),
            })?;
        table.insert(key, env_value(raw));
    }
    Ok(())
}

impl Config {
    /// Parse `text` (TOML), then apply overrides from `env`. Variables
    /// outside the `CODEASSAY_` namespace are ignored.
    pub fn from_sources(text: &str, env: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut doc: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        apply_env(&mut doc, env)?;
        let cfg: Config = doc
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    /// Read `path` if given, else start from defaults.
    pub fn load(path: Option<&Path>, env: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })?,
            None => String::new(),
        };
        Self::from_sources(&text, env)
    }

    /// Range checks on every numeric knob, plus live-provider requirements.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.retry
            .validate()
            .map_err(|e| invalid("retry", e.to_string()))?;
        self.lint
            .validate()
            .map_err(|e| invalid("lint", e.to_string()))?;
        let p = &self.provider;
        if !(0.0..=2.0).contains(&p.temperature) {
            return Err(invalid("provider.temperature", "must lie in [0, 2]"));
        }
        if !(1..=1_000_000).contains(&p.max_output_chars) {
            return Err(invalid(
                "provider.max_output_chars",
                "must lie in [1, 1000000]",
            ));
        }
        if !(p.timeout_secs.is_finite() && p.timeout_secs > 0.0) {
            return Err(invalid("provider.timeout_secs", "must be positive"));
        }
        if p.mode == ProviderMode::Live {
            if p.model_id.as_deref().is_none_or(|m| m.trim().is_empty()) {
                return Err(ConfigError::Missing("provider.model_id"));
            }
            if p.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                return Err(ConfigError::Missing("provider.endpoint"));
            }
        }
        if self.chunking.max_chars < 80 {
            return Err(invalid("chunking.max_chars", "must be at least 80"));
        }
        if self.chunking.overlap_lines > 200 {
            return Err(invalid("chunking.overlap_lines", "must be at most 200"));
        }
        for (field, v) in [
            ("concurrency.units", self.concurrency.units),
            ("concurrency.downloads", self.concurrency.downloads),
        ] {
            if !(1..=64).contains(&v) {
                return Err(invalid(field, "must lie in [1, 64]"));
            }
        }
        let r = &self.repository;
        if !(r.timeout_secs.is_finite() && r.timeout_secs > 0.0) {
            return Err(invalid("repository.timeout_secs", "must be positive"));
        }
        if !(r.max_rate_limit_wait_secs.is_finite() && r.max_rate_limit_wait_secs >= 0.0) {
            return Err(invalid(
                "repository.max_rate_limit_wait_secs",
                "must be non-negative",
            ));
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "must name at least one format"));
        }
        if self.ingest.extensions.is_empty() {
            return Err(invalid(
                "ingest.extensions",
                "must name at least one extension",
            ));
        }
        if self.ingest.max_file_bytes == 0 {
            return Err(invalid("ingest.max_file_bytes", "must be positive"));
        }
        if self.prompt.lint_top_n == 0 {
            return Err(invalid("prompt.lint_top_n", "must be at least 1"));
        }
        Ok(())
    }

    pub fn prompt_settings(&self) -> PromptSettings {
        PromptSettings {
            model_id: self
                .provider
                .model_id
                .clone()
                .unwrap_or_else(|| "scripted".into()),
            max_output_chars: self.provider.max_output_chars,
            temperature: self.provider.temperature,
            lint_top_n: self.prompt.lint_top_n,
        }
    }

    /// Live provider settings; the key is looked up in `env`.
    pub fn http_provider(
        &self,
        env: &BTreeMap<String, String>,
    ) -> Result<HttpProviderConfig, ConfigError> {
        let endpoint = self
            .provider
            .endpoint
            .clone()
            .ok_or(ConfigError::Missing("provider.endpoint"))?;
        Ok(HttpProviderConfig {
            endpoint,
            api_key: env.get(&self.provider.api_key_env).cloned(),
            timeout: Duration::from_secs_f64(self.provider.timeout_secs),
        })
    }

    pub fn repo_client(&self, env: &BTreeMap<String, String>) -> RepoClientConfig {
        RepoClientConfig {
            api_base: self.repository.api_base.clone(),
            token: env
                .get(&self.repository.token_env)
                .filter(|t| !t.is_empty())
                .cloned(),
            timeout: Duration::from_secs_f64(self.repository.timeout_secs),
            concurrency: self.concurrency.downloads,
            max_rate_limit_wait: Duration::from_secs_f64(self.repository.max_rate_limit_wait_secs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults_need_live_settings() {
        let cfg = Config::from_sources("", &env(&[])).unwrap();
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Missing("provider.model_id"))
        ));
        let cfg = Config::from_sources("[provider]\nmodel_id = \"m\"\n", &env(&[])).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("provider.endpoint"), "{err}");
    }

    #[test]
    fn env_overrides_file() {
        let text = "[provider]\nmode = \"scripted\"\n[concurrency]\nunits = 3\n";
        let cfg = Config::from_sources(
            text,
            &env(&[
                ("CODEASSAY_CONCURRENCY__UNITS", "5"),
                ("CODEASSAY_LINT__COMMAND", "ruff-json"),
                ("CODEASSAY_OUTPUT__FORMATS", "[\"html\"]"),
                ("HOME", "/root"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.concurrency.units, 5);
        assert_eq!(cfg.lint.command, "ruff-json");
        assert_eq!(cfg.output.formats, [OutputFormat::Html]);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_ranges_are_rejected() {
        assert!(matches!(
            Config::from_sources("[chunking]\nmax_char = 10\n", &env(&[])),
            Err(ConfigError::Parse(_))
        ));
        let cfg = Config::from_sources(
            "[provider]\nmode = \"scripted\"\n[chunking]\nmax_chars = 10\n",
            &env(&[]),
        )
        .unwrap();
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("chunking.max_chars"));
        let cfg = Config::from_sources(
            "[provider]\nmode = \"scripted\"\n[output]\nformats = []\n",
            &env(&[]),
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
