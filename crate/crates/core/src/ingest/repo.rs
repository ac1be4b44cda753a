use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Deserialize;

use super::directory::decode;
use super::{CodeUnit, IngestError, IngestOptions, SkipReason, SkippedFile, SourceSpec};
use crate::exec::Execution;
use crate::provider::ErrorKind;
use crate::runtime::{
    with_retry, Clock, EventKind, EventSink, NullSink, RetryError, RetryPolicy, RunEvent,
    SystemClock,
};

/// Name used for fetch progress events.
pub const FETCH_EVENT_NAME: &str = "repository_fetch";

#[derive(Debug, Clone)]
pub struct RepoClientConfig {
    /// REST API root, `https://api.github.com` for the public service.
    pub api_base: String,
    pub token: Option<String>,
    pub timeout: Duration,
    /// Concurrent file downloads.
    pub concurrency: usize,
    /// Upper bound on a single rate-limit pause.
    pub max_rate_limit_wait: Duration,
}

impl Default for RepoClientConfig {
    fn default() -> Self {
        Self {
            api_base: "https://api.github.com".into(),
            token: None,
            timeout: Duration::from_secs(30),
            concurrency: 4,
            max_rate_limit_wait: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoMetadata {
    pub full_name: String,
    pub default_branch: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoFetch {
    pub metadata: RepoMetadata,
    /// Branch or commit the tree was read from.
    pub reference: String,
    pub units: Vec<CodeUnit>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Deserialize)]
struct RepoInfo {
    full_name: String,
    default_branch: String,
}

#[derive(Deserialize)]
struct TreeListing {
    tree: Vec<TreeEntry>,
    #[serde(default)]
    truncated: bool,
}

#[derive(Deserialize)]
struct TreeEntry {
    path: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    size: Option<u64>,
}

/// Blocking client for the repository REST API.
///
/// Every request is wrapped in the retry policy; a rate-limited response
/// pauses all workers until the advertised reset (capped).
pub struct RepoClient {
    cfg: RepoClientConfig,
    agent: ureq::Agent,
    policy: RetryPolicy,
    clock: Arc<dyn Clock>,
    sink: Arc<dyn EventSink>,
    seed: u64,
    execution: Execution,
    pause_until: AtomicU64,
}

impl RepoClient {
    pub fn new(cfg: RepoClientConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            cfg,
            agent,
            policy: RetryPolicy::default(),
            clock: Arc::new(SystemClock::new()),
            sink: Arc::new(NullSink),
            seed: 0,
            execution: Execution::default(),
            pause_until: AtomicU64::new(0),
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_sink(mut self, sink: Arc<dyn EventSink>) -> Self {
        self.sink = sink;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn emit(&self, kind: EventKind, payload: String) {
        self.sink.emit(RunEvent {
            timestamp: self.clock.now(),
            agent_name: FETCH_EVENT_NAME.into(),
            kind,
            payload,
        });
    }

    fn url(&self, segments: &[&str], query: Option<(&str, &str)>) -> Result<String, IngestError> {
        let mut url = url::Url::parse(&self.cfg.api_base).map_err(|e| IngestError::Http {
            status: None,
            detail: format!("bad API base `{}`: {e}", self.cfg.api_base),
            kind: ErrorKind::Permanent,
            rate_limit_reset: None,
        })?;
        url.path_segments_mut()
            .map_err(|_| IngestError::InvalidRepoUrl(self.cfg.api_base.clone()))?
            .pop_if_empty()
            .extend(segments);
        if let Some((k, v)) = query {
            url.query_pairs_mut().append_pair(k, v);
        }
        Ok(url.into())
    }

    fn wait_for_rate_limit(&self) {
        let until = self.pause_until.load(Ordering::SeqCst);
        let now = epoch_secs();
        if until > now {
            let wait = Duration::from_secs(until - now).min(self.cfg.max_rate_limit_wait);
            self.emit(
                EventKind::Retried,
                format!("rate limited; pausing {}s", wait.as_secs()),
            );
            self.clock.sleep(wait);
            let _ = self
                .pause_until
                .compare_exchange(until, 0, Ordering::SeqCst, Ordering::SeqCst);
        }
    }

    fn get_once(&self, url: &str, accept: &str) -> Result<Vec<u8>, IngestError> {
        self.wait_for_rate_limit();
        let mut request = self
            .agent
            .get(url)
            .header("User-Agent", "codeassay")
            .header("Accept", accept)
            .header("X-GitHub-Api-Version", "2022-11-28");
        if let Some(token) = &self.cfg.token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.call().map_err(|e| {
            let detail = e.to_string();
            IngestError::Http {
                status: None,
                kind: ErrorKind::classify(None, &detail),
                detail,
                rate_limit_reset: None,
            }
        })?;
        let status = response.status().as_u16();
        let header = |name: &str| {
            response
                .headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
        };
        let remaining = header("x-ratelimit-remaining");
        let reset = header("x-ratelimit-reset");
        let exhausted = remaining == Some(0);
        if exhausted {
            if let Some(reset) = reset {
                self.pause_until.fetch_max(reset, Ordering::SeqCst);
            }
        }
        let body = response
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| IngestError::Http {
                status: Some(status),
                detail: format!("reading body: {e}"),
                kind: ErrorKind::Transient,
                rate_limit_reset: None,
            })?;
        if status < 400 {
            return Ok(body);
        }
        let detail: String = String::from_utf8_lossy(&body).chars().take(200).collect();
        let kind = if matches!(status, 403 | 429) && exhausted {
            ErrorKind::Transient
        } else {
            ErrorKind::classify(Some(status), &detail)
        };
        Err(IngestError::Http {
            status: Some(status),
            detail,
            kind,
            rate_limit_reset: if exhausted { reset } else { None },
        })
    }

    fn get(&self, url: &str, accept: &str) -> Result<Vec<u8>, IngestError> {
        with_retry(
            &self.policy,
            self.seed,
            self.clock.as_ref(),
            |_| self.get_once(url, accept),
            |notice| {
                self.emit(
                    EventKind::Retried,
                    format!(
                        "attempt {} failed ({}); retrying",
                        notice.attempt, notice.error
                    ),
                )
            },
        )
        .map_err(|err| match err {
            RetryError::Exhausted { attempts, last } => IngestError::RetriesExhausted {
                attempts,
                last: Box::new(last),
            },
            RetryError::Permanent(e) => e,
        })
    }

    fn get_json<T: for<'de> Deserialize<'de>>(&self, url: &str) -> Result<T, IngestError> {
        let body = self.get(url, "application/vnd.github+json")?;
        serde_json::from_slice(&body).map_err(|e| IngestError::Http {
            status: None,
            detail: format!("unexpected response shape from {url}: {e}"),
            kind: ErrorKind::Permanent,
            rate_limit_reset: None,
        })
    }
}

fn epoch_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Enumerate the repository tree and download every matching file.
pub fn fetch_repository(
    spec: &SourceSpec,
    opts: &IngestOptions,
    client: &RepoClient,
) -> Result<RepoFetch, IngestError> {
    let SourceSpec::Repository { repo, reference } = spec else {
        return Err(IngestError::InvalidRepoUrl(spec.to_string()));
    };
    client.emit(EventKind::Started, format!("{}/{}", repo.owner, repo.name));
    let result = fetch_inner(repo, reference.as_deref(), opts, client);
    match &result {
        Ok(fetch) => client.emit(
            EventKind::Completed,
            format!(
                "{} files, {} skipped",
                fetch.units.len(),
                fetch.skipped.len()
            ),
        ),
        Err(err) => client.emit(EventKind::Failed, err.to_string()),
    }
    result
}

fn fetch_inner(
    repo: &super::RepoLocator,
    reference: Option<&str>,
    opts: &IngestOptions,
    client: &RepoClient,
) -> Result<RepoFetch, IngestError> {
    let base = ["repos", repo.owner.as_str(), repo.name.as_str()];
    let info: RepoInfo = client.get_json(&client.url(&base, None)?)?;
    let reference = reference.unwrap_or(&info.default_branch).to_string();

    let mut tree_path = base.to_vec();
    tree_path.extend(["git", "trees", reference.as_str()]);
    let listing: TreeListing =
        client.get_json(&client.url(&tree_path, Some(("recursive", "1")))?)?;
    if listing.truncated {
        client.emit(
            EventKind::Retried,
            "tree listing truncated by the API".into(),
        );
    }

    let mut skipped = Vec::new();
    let mut wanted = Vec::new();
    for entry in listing.tree {
        if entry.kind != "blob"
            || !opts.matches_extension(&entry.path)
            || opts.ignores_path(&entry.path)
        {
            continue;
        }
        match entry.size {
            Some(bytes) if bytes > opts.max_file_bytes => skipped.push(SkippedFile {
                path: entry.path,
                reason: SkipReason::TooLarge { bytes },
            }),
            _ => wanted.push(entry.path),
        }
    }

    let downloads = client
        .execution
        .map_bounded(&wanted, client.cfg.concurrency.max(1), |path| {
            let mut segments = base.to_vec();
            segments.push("contents");
            segments.extend(path.split('/'));
            let url = client.url(&segments, Some(("ref", reference.as_str())))?;
            client.get(&url, "application/vnd.github.raw")
        });

    let mut units = Vec::new();
    for (path, outcome) in wanted.into_iter().zip(downloads) {
        match outcome {
            Ok(bytes) if bytes.len() as u64 > opts.max_file_bytes => skipped.push(SkippedFile {
                path,
                reason: SkipReason::TooLarge {
                    bytes: bytes.len() as u64,
                },
            }),
            Ok(bytes) => match decode(bytes) {
                Ok(content) => units.push(CodeUnit::new(path, content)),
                Err(reason) => skipped.push(SkippedFile { path, reason }),
            },
            Err(err @ IngestError::RetriesExhausted { .. }) => return Err(err),
            Err(err) => skipped.push(SkippedFile {
                path,
                reason: SkipReason::Unreadable(err.to_string()),
            }),
        }
    }
    units.sort_by(|a, b| a.rel_path.cmp(&b.rel_path));
    skipped.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(RepoFetch {
        metadata: RepoMetadata {
            full_name: info.full_name,
            default_branch: info.default_branch,
        },
        reference,
        units,
        skipped,
    })
}
