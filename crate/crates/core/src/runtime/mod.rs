//! Agent composition runtime: sequential chaining, parallel fan-out with a
//! key-by-name merge, agent-as-tool wrapping, retry with backoff, and a
//! run lifecycle reported through [`RunEvent`]s.

mod clock;
mod events;
mod node;
mod retry;
mod runner;

use std::fmt;

use thiserror::Error;

use crate::provider::ProviderError;

pub use clock::{Clock, SystemClock, VirtualClock};
pub use events::{is_well_formed_lifecycle, EventKind, EventSink, MemorySink, NullSink, RunEvent};
pub use node::{extract_section, AgentOutput, AgentSpec, CompositionNode, OutputMap};
pub use retry::{
    backoff_delay, with_retry, PolicyError, RetryError, RetryNotice, RetryPolicy, Transient,
};
pub use runner::{Prompter, RunContext, Runner, Tool, ToolId, ToolOutput};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("prompt construction failed: {0}")]
    Prompt(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("tool `{tool}` failed: {source}")]
    Tool {
        tool: String,
        #[source]
        source: Box<RunError>,
    },
    #[error(transparent)]
    Provider(ProviderError),
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetryExhausted { attempts: u32, last: ProviderError },
}

#[derive(Debug)]
pub struct LeafFailure {
    pub agent: String,
    pub error: AgentError,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("invalid composition: {0}")]
    InvalidComposition(String),
    /// One or more leaves failed terminally. `partial` holds every output
    /// that did complete, so callers can degrade instead of aborting.
    #[error("{}", FailureList(.failures))]
    Failed {
        failures: Vec<LeafFailure>,
        partial: OutputMap,
    },
}

impl RunError {
    pub fn failed_agents(&self) -> Vec<&str> {
        match self {
            RunError::Failed { failures, .. } => {
                failures.iter().map(|f| f.agent.as_str()).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn partial(&self) -> Option<&OutputMap> {
        match self {
            RunError::Failed { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

struct FailureList<'a>(&'a [LeafFailure]);

impl fmt::Display for FailureList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, failure) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "agent `{}` failed: {}", failure.agent, failure.error)?;
        }
        Ok(())
    }
}
