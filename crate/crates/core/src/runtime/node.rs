use std::collections::{BTreeMap, BTreeSet};

use super::RunError;

/// A single model-backed agent: role prompt, output contract and tools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSpec {
    pub name: String,
    pub role_prompt: String,
    /// Section headers the agent must emit, e.g. `## Findings`.
    pub output_contract: Vec<String>,
    /// Identifiers of tools invoked before the agent is prompted.
    pub tools: Vec<String>,
}

impl AgentSpec {
    pub fn new(name: impl Into<String>, role_prompt: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            role_prompt: role_prompt.into(),
            output_contract: Vec::new(),
            tools: Vec::new(),
        }
    }

    pub fn with_contract<I, S>(mut self, headers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.output_contract = headers.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_tool(mut self, tool: impl Into<String>) -> Self {
        self.tools.push(tool.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompositionNode {
    Leaf(AgentSpec),
    /// Children run in declaration order; context accumulates between steps.
    Sequential {
        name: String,
        children: Vec<CompositionNode>,
    },
    /// Children run concurrently on the same read-only context.
    Parallel {
        name: String,
        children: Vec<CompositionNode>,
    },
}

impl CompositionNode {
    pub fn leaf(spec: AgentSpec) -> Self {
        CompositionNode::Leaf(spec)
    }

    pub fn sequential(
        name: impl Into<String>,
        children: Vec<CompositionNode>,
    ) -> Result<Self, RunError> {
        let node = CompositionNode::Sequential {
            name: name.into(),
            children,
        };
        node.check()?;
        Ok(node)
    }

    pub fn parallel(
        name: impl Into<String>,
        children: Vec<CompositionNode>,
    ) -> Result<Self, RunError> {
        let node = CompositionNode::Parallel {
            name: name.into(),
            children,
        };
        node.check()?;
        Ok(node)
    }

    pub fn name(&self) -> &str {
        match self {
            CompositionNode::Leaf(spec) => &spec.name,
            CompositionNode::Sequential { name, .. } | CompositionNode::Parallel { name, .. } => {
                name
            }
        }
    }

    pub fn children(&self) -> &[CompositionNode] {
        match self {
            CompositionNode::Leaf(_) => &[],
            CompositionNode::Sequential { children, .. }
            | CompositionNode::Parallel { children, .. } => children,
        }
    }

    /// Leaf agents in declaration (depth-first) order.
    pub fn leaves(&self) -> Vec<&AgentSpec> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a AgentSpec>) {
        match self {
            CompositionNode::Leaf(spec) => out.push(spec),
            _ => self.children().iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Every named node in this subtree, this node included.
    pub fn named_nodes(&self) -> BTreeMap<&str, &CompositionNode> {
        let mut out = BTreeMap::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.insert(node.name(), node);
            stack.extend(node.children());
        }
        out
    }

    /// Non-empty composites and unique names throughout the subtree.
    pub fn check(&self) -> Result<(), RunError> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if !seen.insert(node.name()) {
                return Err(RunError::InvalidComposition(format!(
                    "duplicate agent name `{}`",
                    node.name()
                )));
            }
            if !matches!(node, CompositionNode::Leaf(_)) && node.children().is_empty() {
                return Err(RunError::InvalidComposition(format!(
                    "`{}` has no children",
                    node.name()
                )));
            }
            stack.extend(node.children());
        }
        Ok(())
    }
}

/// An agent's raw text plus the contract sections found in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentOutput {
    pub agent_name: String,
    pub raw_text: String,
    pub sections: BTreeMap<String, String>,
}

impl AgentOutput {
    pub fn from_text(
        agent_name: impl Into<String>,
        raw_text: impl Into<String>,
        contract: &[String],
    ) -> Self {
        let raw_text = raw_text.into();
        let sections = contract
            .iter()
            .filter_map(|header| {
                extract_section(&raw_text, header).map(|body| (header.clone(), body))
            })
            .collect();
        Self {
            agent_name: agent_name.into(),
            raw_text,
            sections,
        }
    }

    pub fn section(&self, header: &str) -> Option<&str> {
        self.sections.get(header).map(String::as_str)
    }
}

fn is_heading(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("# ") || t.starts_with("## ")
}

/// Body under `header` up to the next level-1/2 heading, trimmed.
/// Header comparison ignores case and surrounding whitespace.
pub fn extract_section(text: &str, header: &str) -> Option<String> {
    let wanted = header.trim();
    let mut lines = text.lines();
    lines
        .by_ref()
        .find(|l| l.trim().eq_ignore_ascii_case(wanted))?;
    let body: Vec<&str> = lines.take_while(|l| !is_heading(l)).collect();
    Some(body.join("\n").trim().to_string())
}

pub type OutputMap = BTreeMap<String, AgentOutput>;
