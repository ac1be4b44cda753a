//! Text-generation backends.
//!
//! Providers perform exactly one backend call per [`ModelProvider::generate`];
//! retrying is the runtime's job.

mod http;
mod scripted;

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::runtime::Transient;

pub use http::{HttpProvider, HttpProviderConfig};
pub use scripted::{FixtureEntry, FixtureError, ScriptedProvider};

#[derive(Debug, Clone, PartialEq)]
pub struct PromptRequest {
    /// The agent issuing the request; scripted providers key on it.
    pub agent_name: String,
    pub system_prompt: String,
    pub user_content: String,
    pub model_id: String,
    pub max_output_chars: usize,
    pub temperature: f64,
}

impl PromptRequest {
    pub fn validate(&self) -> Result<(), ProviderError> {
        let problem = if self.system_prompt.trim().is_empty() {
            "system prompt is empty"
        } else if self.user_content.trim().is_empty() {
            "user content is empty"
        } else if self.max_output_chars == 0 {
            "max_output_chars must be positive"
        } else {
            return Ok(());
        };
        Err(ProviderError::new(
            None,
            format!("invalid request: {problem}"),
        ))
    }

    /// Hex SHA-256 of the user content.
    pub fn content_digest(&self) -> String {
        content_digest(&self.user_content)
    }
}

pub fn content_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinishReason {
    Complete,
    Truncated,
    Refused,
}

/// Rough character-derived counts; not billing-accurate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    pub input_tokens: usize,
    pub output_tokens: usize,
}

impl Usage {
    pub fn estimate(input: &str, output: &str) -> Self {
        Self {
            input_tokens: input.chars().count().div_ceil(4),
            output_tokens: output.chars().count().div_ceil(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: Usage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Transient,
    Permanent,
}

const TRANSIENT_MARKERS: &[&str] = &[
    "timeout",
    "timed out",
    "rate limit",
    "rate-limit",
    "too many requests",
    "temporarily unavailable",
    "connection reset",
    "connection refused",
    "connection closed",
    "overloaded",
];

impl ErrorKind {
    /// Rate limits, timeouts and server-side statuses are worth retrying;
    /// everything else (bad request, auth, missing resource) is not.
    pub fn classify(http_status: Option<u16>, detail: &str) -> ErrorKind {
        match http_status {
            Some(408 | 425 | 429 | 500..=599) => ErrorKind::Transient,
            Some(_) => ErrorKind::Permanent,
            None => {
                let detail = detail.to_ascii_lowercase();
                if TRANSIENT_MARKERS.iter().any(|m| detail.contains(m)) {
                    ErrorKind::Transient
                } else {
                    ErrorKind::Permanent
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ProviderError {
    pub kind: ErrorKind,
    pub detail: String,
    pub http_status: Option<u16>,
}

impl ProviderError {
    pub fn new(http_status: Option<u16>, detail: impl Into<String>) -> Self {
        let detail = detail.into();
        Self {
            kind: ErrorKind::classify(http_status, &detail),
            detail,
            http_status,
        }
    }
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Transient => "transient",
            ErrorKind::Permanent => "permanent",
        };
        match self.http_status {
            Some(status) => write!(f, "{kind} provider error (HTTP {status}): {}", self.detail),
            None => write!(f, "{kind} provider error: {}", self.detail),
        }
    }
}

impl Transient for ProviderError {
    fn is_transient(&self) -> bool {
        self.kind == ErrorKind::Transient
    }
}

pub trait ModelProvider: Send + Sync {
    fn generate(&self, req: &PromptRequest) -> Result<ModelResponse, ProviderError>;
}
