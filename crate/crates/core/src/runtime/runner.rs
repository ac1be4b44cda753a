use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::clock::{Clock, SystemClock};
use super::events::{EventKind, EventSink, NullSink, RunEvent};
use super::node::{AgentOutput, AgentSpec, CompositionNode, OutputMap};
use super::retry::{with_retry, RetryError, RetryPolicy};
use super::{AgentError, LeafFailure, RunError};
use crate::exec::Execution;
use crate::provider::{ModelProvider, PromptRequest};

/// Shared state threaded through a composition.
///
/// Sequential steps hand each step's outputs to [`RunContext::absorb`]
/// before the next step runs; parallel children only ever see `&Self`.
pub trait RunContext: Clone + Send + Sync {
    fn absorb(&mut self, outputs: &OutputMap);
}

/// Result of invoking a tool from inside a leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolOutput {
    pub tool: String,
    pub text: String,
}

/// Builds the model request for a leaf from the current context.
pub trait Prompter<C>: Send + Sync {
    fn prompt(
        &self,
        agent: &AgentSpec,
        ctx: &C,
        tools: &[ToolOutput],
    ) -> Result<PromptRequest, AgentError>;
}

impl<C, F> Prompter<C> for F
where
    F: Fn(&AgentSpec, &C, &[ToolOutput]) -> Result<PromptRequest, AgentError> + Send + Sync,
{
    fn prompt(
        &self,
        agent: &AgentSpec,
        ctx: &C,
        tools: &[ToolOutput],
    ) -> Result<PromptRequest, AgentError> {
        self(agent, ctx, tools)
    }
}

/// Something a leaf can call with its context before it is prompted.
pub trait Tool<C>: Send + Sync {
    fn invoke(&self, runner: &Runner<C>, ctx: &C) -> Result<String, RunError>;
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ToolId(pub String);

impl ToolId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Runs a registered agent (leaf or composite) in place of a tool call.
struct AgentTool {
    target: String,
}

impl<C: RunContext> Tool<C> for AgentTool {
    fn invoke(&self, runner: &Runner<C>, ctx: &C) -> Result<String, RunError> {
        let node = runner
            .agents
            .get(&self.target)
            .ok_or_else(|| RunError::UnknownAgent(self.target.clone()))?;
        let outputs = runner.run_node(node, ctx)?;
        Ok(composite_text(node, &outputs))
    }
}

/// The wrapped leaf's raw text, or for composites every leaf's text in
/// declaration order under a marker line.
fn composite_text(node: &CompositionNode, outputs: &OutputMap) -> String {
    if let CompositionNode::Leaf(spec) = node {
        return outputs
            .get(&spec.name)
            .map(|o| o.raw_text.clone())
            .unwrap_or_default();
    }
    node.leaves()
        .iter()
        .filter_map(|leaf| outputs.get(&leaf.name))
        .map(|o| format!("=== {} ===\n{}", o.agent_name, o.raw_text.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Executes composition trees against a model provider.
pub struct Runner<C> {
    provider: Arc<dyn ModelProvider>,
    prompter: Arc<dyn Prompter<C>>,
    policy: RetryPolicy,
    clock: Arc<dyn Clock>,
    sink: Arc<dyn EventSink>,
    seed: u64,
    execution: Execution,
    agents: BTreeMap<String, CompositionNode>,
    tools: BTreeMap<ToolId, Arc<dyn Tool<C>>>,
}

impl<C: RunContext> Runner<C> {
    pub fn new(provider: Arc<dyn ModelProvider>, prompter: Arc<dyn Prompter<C>>) -> Self {
        Self {
            provider,
            prompter,
            policy: RetryPolicy::default(),
            clock: Arc::new(SystemClock::new()),
            sink: Arc::new(NullSink),
            seed: 0,
            execution: Execution::default(),
            agents: BTreeMap::new(),
            tools: BTreeMap::new(),
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

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn sink(&self) -> &Arc<dyn EventSink> {
        &self.sink
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    /// Register `node` and every named node beneath it.
    pub fn register(&mut self, node: &CompositionNode) -> Result<(), RunError> {
        node.check()?;
        for (name, sub) in node.named_nodes() {
            self.agents.insert(name.to_string(), sub.clone());
        }
        Ok(())
    }

    pub fn agent(&self, name: &str) -> Option<&CompositionNode> {
        self.agents.get(name)
    }

    /// Expose a registered agent as a tool other agents may list.
    pub fn wrap_agent_as_tool(&mut self, name: &str) -> Result<ToolId, RunError> {
        if !self.agents.contains_key(name) {
            return Err(RunError::UnknownAgent(name.to_string()));
        }
        let id = ToolId(name.to_string());
        self.tools.insert(
            id.clone(),
            Arc::new(AgentTool {
                target: name.to_string(),
            }),
        );
        Ok(id)
    }

    pub fn register_tool(&mut self, id: impl Into<String>, tool: Arc<dyn Tool<C>>) -> ToolId {
        let id = ToolId(id.into());
        self.tools.insert(id.clone(), tool);
        id
    }

    pub fn invoke_tool(&self, id: &str, ctx: &C) -> Result<String, RunError> {
        let tool = self
            .tools
            .get(&ToolId(id.to_string()))
            .ok_or_else(|| RunError::UnknownTool(id.to_string()))?;
        tool.invoke(self, ctx)
    }

    pub fn run_agent(&self, name: &str, ctx: &C) -> Result<OutputMap, RunError> {
        let node = self
            .agents
            .get(name)
            .ok_or_else(|| RunError::UnknownAgent(name.to_string()))?;
        self.run_node(node, ctx)
    }

    /// Execute `node`, returning one output per leaf keyed by agent name.
    pub fn run_node(&self, node: &CompositionNode, ctx: &C) -> Result<OutputMap, RunError> {
        match node {
            CompositionNode::Leaf(spec) => match self.run_leaf(spec, ctx) {
                Ok(out) => Ok(OutputMap::from([(spec.name.clone(), out)])),
                Err(error) => Err(RunError::Failed {
                    failures: vec![LeafFailure {
                        agent: spec.name.clone(),
                        error,
                    }],
                    partial: OutputMap::new(),
                }),
            },
            CompositionNode::Sequential { children, .. } => {
                let mut ctx = ctx.clone();
                let mut merged = OutputMap::new();
                for child in children {
                    match self.run_node(child, &ctx) {
                        Ok(outputs) => {
                            ctx.absorb(&outputs);
                            merged.extend(outputs);
                        }
                        Err(RunError::Failed { failures, partial }) => {
                            merged.extend(partial);
                            return Err(RunError::Failed {
                                failures,
                                partial: merged,
                            });
                        }
                        Err(other) => return Err(other),
                    }
                }
                Ok(merged)
            }
            CompositionNode::Parallel { children, .. } => {
                let results = self
                    .execution
                    .map(children, |child| self.run_node(child, ctx));
                let mut merged = OutputMap::new();
                let mut failures = Vec::new();
                for result in results {
                    match result {
                        Ok(outputs) => merged.extend(outputs),
                        Err(RunError::Failed {
                            failures: f,
                            partial,
                        }) => {
                            merged.extend(partial);
                            failures.extend(f);
                        }
                        Err(other) => return Err(other),
                    }
                }
                if failures.is_empty() {
                    Ok(merged)
                } else {
                    Err(RunError::Failed {
                        failures,
                        partial: merged,
                    })
                }
            }
        }
    }

    fn emit(&self, agent: &str, kind: EventKind, payload: impl Into<String>) {
        self.sink.emit(RunEvent {
            timestamp: self.clock.now(),
            agent_name: agent.to_string(),
            kind,
            payload: payload.into(),
        });
    }

    fn leaf_seed(&self, name: &str) -> u64 {
        let mut hasher = DefaultHasher::new();
        name.hash(&mut hasher);
        self.seed ^ hasher.finish()
    }

    fn run_leaf(&self, spec: &AgentSpec, ctx: &C) -> Result<AgentOutput, AgentError> {
        self.emit(&spec.name, EventKind::Started, "");
        let result = self.attempt_leaf(spec, ctx);
        match &result {
            Ok(out) => self.emit(
                &spec.name,
                EventKind::Completed,
                format!("{} chars", out.raw_text.chars().count()),
            ),
            Err(err) => self.emit(&spec.name, EventKind::Failed, err.to_string()),
        }
        result
    }

    fn attempt_leaf(&self, spec: &AgentSpec, ctx: &C) -> Result<AgentOutput, AgentError> {
        let mut tool_outputs = Vec::with_capacity(spec.tools.len());
        for tool in &spec.tools {
            self.emit(&spec.name, EventKind::ToolInvoked, tool.as_str());
            let text = self.invoke_tool(tool, ctx).map_err(|source| match source {
                RunError::UnknownTool(name) => AgentError::UnknownTool(name),
                other => AgentError::Tool {
                    tool: tool.clone(),
                    source: Box::new(other),
                },
            })?;
            tool_outputs.push(ToolOutput {
                tool: tool.clone(),
                text,
            });
        }
        let request = self.prompter.prompt(spec, ctx, &tool_outputs)?;
        let response = with_retry(
            &self.policy,
            self.leaf_seed(&spec.name),
            self.clock.as_ref(),
            |_| self.provider.generate(&request),
            |notice| {
                self.emit(
                    &spec.name,
                    EventKind::Retried,
                    format!(
                        "attempt {} failed ({}); retrying in {:.3}s",
                        notice.attempt,
                        notice.error,
                        notice.delay.as_secs_f64()
                    ),
                )
            },
        )
        .map_err(|err| match err {
            RetryError::Exhausted { attempts, last } => {
                AgentError::RetryExhausted { attempts, last }
            }
            RetryError::Permanent(e) => AgentError::Provider(e),
        })?;
        Ok(AgentOutput::from_text(
            spec.name.clone(),
            response.text,
            &spec.output_contract,
        ))
    }
}
