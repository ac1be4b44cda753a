use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Finding, Role, CORRECTNESS_ASSESSOR, DESCRIPTION_GENERATOR, STYLE_ASSESSOR};
use crate::ingest::{Chunk, CodeUnit, SourceSpec};
use crate::lint::{summarize_diagnostics, LintResult, DEFAULT_TOP_N};
use crate::provider::PromptRequest;
use crate::runtime::{AgentError, AgentSpec, OutputMap, Prompter, RunContext, ToolOutput};

/// Model-side knobs shared by every agent request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSettings {
    pub model_id: String,
    pub max_output_chars: usize,
    pub temperature: f64,
    /// Lint messages shown to the correctness assessor.
    pub lint_top_n: usize,
}

impl Default for PromptSettings {
    fn default() -> Self {
        Self {
            model_id: "scripted".into(),
            max_output_chars: 8000,
            temperature: 0.2,
            lint_top_n: DEFAULT_TOP_N,
        }
    }
}

/// Everything an agent may be prompted with.
#[derive(Debug, Clone)]
pub struct AssessmentContext {
    pub source: SourceSpec,
    pub units: Vec<CodeUnit>,
    /// Chunks to show per unit path; a unit without an entry is shown whole.
    pub chunks: BTreeMap<String, Vec<Chunk>>,
    pub lint_results: BTreeMap<String, LintResult>,
    pub upstream: OutputMap,
    /// De-duplicated findings, numbered `F1..` for the recommender.
    pub findings: Vec<Finding>,
    /// `(path, summary)` pairs for the codebase-level description.
    pub file_summaries: Vec<(String, String)>,
}

impl AssessmentContext {
    pub fn new(source: SourceSpec) -> Self {
        Self {
            source,
            units: Vec::new(),
            chunks: BTreeMap::new(),
            lint_results: BTreeMap::new(),
            upstream: OutputMap::new(),
            findings: Vec::new(),
            file_summaries: Vec::new(),
        }
    }

    /// Every unit named by `chunks` or `lint_results` is present in `units`.
    pub fn check(&self) -> Result<(), ContextError> {
        for path in self.chunks.keys().chain(self.lint_results.keys()) {
            if !self.units.iter().any(|u| &u.rel_path == path) {
                return Err(ContextError::UnknownUnit(path.clone()));
            }
        }
        Ok(())
    }
}

impl RunContext for AssessmentContext {
    fn absorb(&mut self, outputs: &OutputMap) {
        self.upstream
            .extend(outputs.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("context has no code to assess")]
    NoCode,
    #[error("context references `{0}`, which is not among its units")]
    UnknownUnit(String),
    #[error("no lint result for `{0}`")]
    MissingLint(String),
    #[error("missing upstream output from `{0}`")]
    MissingUpstream(String),
    #[error("no assessment results to conclude from")]
    NoPipelineOutput,
}

const TONE: &str = "Use constructive, professional language suitable for a developer audience, \
                    avoiding condescension or excessive praise.";

fn role_statement(role: Role) -> &'static str {
    match role {
        Role::Correctness => {
            "You are an expert Python code correctness assessor. Analyse the logical and functional \
             correctness of the code: algorithmic errors, off-by-one mistakes, improper error handling \
             and potential runtime exceptions. Surface security-relevant observations here as well \
             (injection risks, unsafe deserialization, hard-coded secrets) and tag them [security]."
        }
        Role::Style => {
            "You are an expert Python style assessor. Evaluate PEP 8 compliance, naming conventions, \
             code organisation and readability, documentation coverage and complexity."
        }
        Role::Description => {
            "You are an expert at explaining Python code. Produce a concise natural-language summary of \
             what the code does: its purpose, main components and architectural patterns. Do not review \
             its quality."
        }
        Role::Recommender => {
            "You are a senior engineer turning review results into an improvement plan. De-duplicate the \
             findings from the three parallel assessors, rank recommendations by severity and impact, and \
             produce at most ten concrete action items."
        }
        Role::Orchestrator => {
            "You are the lead reviewer closing a code quality report. From the assessment results given, \
             write an overall assessment with suggested next steps."
        }
    }
}

fn format_contract(role: Role) -> String {
    let mut s =
        String::from("Respond in Markdown using exactly these section headers, in this order:\n");
    for header in role.contract() {
        s.push_str(header);
        s.push('\n');
    }
    let findings = "Under ## Findings list one issue per bullet as `- [severity] line N: description (CODE)`, \
                    where severity is one of critical, major, minor or info. Write `(none)` when there are no issues.";
    match role {
        Role::Correctness => {
            s.push_str(findings);
            s.push_str("\nUnder ## Score give one number from 0 to 10 as `N/10`, then a one-line rationale.");
        }
        Role::Style => {
            s.push_str(findings);
            s.push_str(
                " Tag findings about modularity, coupling or complexity with [maintainability].\n\
                 Under ## Score give two lines, `Style: N/10` and `Maintainability: N/10`, then a one-line rationale.",
            );
        }
        Role::Description => s.push_str("Under ## Summary write one paragraph."),
        Role::Recommender => s.push_str(
            "Under ## Recommendations give a numbered list with one action per item, written as \
             `1. [severity, impact] [dimension] imperative action (F1, F2)`. Impact is high, medium or low; \
             dimension is correctness, security, style or maintainability; F-numbers refer to the findings listed.",
        ),
        Role::Orchestrator => s.push_str("Under ## Conclusion write two to four sentences."),
    }
    s
}

fn code_payload(ctx: &AssessmentContext) -> String {
    let mut out = String::new();
    for unit in &ctx.units {
        let whole;
        let chunks: &[Chunk] = match ctx.chunks.get(&unit.rel_path) {
            Some(chunks) => chunks,
            None => {
                whole = [Chunk {
                    unit_path: unit.rel_path.clone(),
                    index: 0,
                    start_line: 1,
                    end_line: unit.line_count,
                    content: unit.content.clone(),
                }];
                &whole
            }
        };
        for chunk in chunks {
            let _ = writeln!(
                out,
                "=== File: {} (lines {}-{} of {}) ===",
                unit.rel_path, chunk.start_line, chunk.end_line, unit.line_count
            );
            for (offset, line) in chunk.content.lines().enumerate() {
                let _ = writeln!(out, "{:>4} | {}", chunk.start_line + offset, line);
            }
            out.push('\n');
        }
    }
    out
}

/// Line span shown for `unit`, used to keep lint evidence in range.
fn shown_span(ctx: &AssessmentContext, unit: &CodeUnit) -> (usize, usize) {
    match ctx.chunks.get(&unit.rel_path) {
        Some(chunks) if !chunks.is_empty() => (
            chunks.iter().map(|c| c.start_line).min().unwrap_or(1),
            chunks
                .iter()
                .map(|c| c.end_line)
                .max()
                .unwrap_or(unit.line_count),
        ),
        _ => (1, unit.line_count.max(1)),
    }
}

fn lint_evidence(ctx: &AssessmentContext, top_n: usize) -> Result<String, ContextError> {
    let mut out = String::new();
    for unit in &ctx.units {
        let result = ctx
            .lint_results
            .get(&unit.rel_path)
            .ok_or_else(|| ContextError::MissingLint(unit.rel_path.clone()))?;
        match result {
            LintResult::Diagnostics(all) => {
                let (lo, hi) = shown_span(ctx, unit);
                let in_range: Vec<_> = all
                    .iter()
                    .filter(|d| d.line >= lo && d.line <= hi)
                    .cloned()
                    .collect();
                let summary = summarize_diagnostics(&in_range, top_n);
                let counts: Vec<String> = crate::lint::LintCategory::ALL
                    .iter()
                    .map(|c| format!("{c} {}", summary.counts[c]))
                    .collect();
                let _ = writeln!(
                    out,
                    "Static analysis for {}: {} messages ({})",
                    unit.rel_path,
                    summary.total,
                    counts.join(", ")
                );
                for d in &summary.top {
                    let _ = writeln!(
                        out,
                        "- line {}, col {}: {} {} [{}] {}",
                        d.line, d.column, d.code, d.symbol, d.category, d.message
                    );
                }
            }
            LintResult::RawFallback(raw) => {
                let raw: String = raw.chars().take(4000).collect();
                let _ = writeln!(
                    out,
                    "Static analysis output for {} (unparsed):\n{}",
                    unit.rel_path,
                    raw.trim_end()
                );
            }
            LintResult::Unavailable { reason } => {
                let _ = writeln!(
                    out,
                    "Static analysis unavailable for {} ({reason}); assess from the code alone.",
                    unit.rel_path
                );
            }
        }
    }
    out.push_str("Cite line numbers and lint codes for every finding the evidence supports.\n");
    Ok(out)
}

fn finding_list(findings: &[Finding]) -> String {
    if findings.is_empty() {
        return "(none)\n".into();
    }
    let mut out = String::new();
    for (i, f) in findings.iter().enumerate() {
        let codes = if f.lint_codes.is_empty() {
            String::new()
        } else {
            format!(" ({})", f.lint_codes.join(", "))
        };
        let _ = writeln!(
            out,
            "F{}. [{}] [{}] {}: {}{}",
            i + 1,
            f.severity,
            f.dimension,
            f.location(),
            f.description,
            codes
        );
    }
    out
}

/// Assemble the request for `role` from `ctx`.
///
/// `tools` carries the text of tools the agent invoked first; only the
/// orchestrator uses it.
pub fn build_prompt(
    role: Role,
    ctx: &AssessmentContext,
    settings: &PromptSettings,
    tools: &[ToolOutput],
) -> Result<PromptRequest, ContextError> {
    ctx.check()?;
    let system_prompt = format!(
        "{}\n\n{}\n\n{}",
        role_statement(role),
        format_contract(role),
        TONE
    );
    let needs_code = matches!(role, Role::Correctness | Role::Style)
        || (role == Role::Description && ctx.file_summaries.is_empty());
    if needs_code && ctx.units.iter().all(|u| u.content.trim().is_empty()) {
        return Err(ContextError::NoCode);
    }
    let mut user = format!("Source: {}\n\n", ctx.source);
    match role {
        Role::Correctness => {
            user.push_str(&code_payload(ctx));
            user.push_str(&lint_evidence(ctx, settings.lint_top_n)?);
        }
        Role::Style => {
            user.push_str(&code_payload(ctx));
            user.push_str("Assess style and maintainability of the code above.\n");
        }
        Role::Description if ctx.file_summaries.is_empty() => {
            user.push_str(&code_payload(ctx));
            user.push_str("Summarise what the code above does.\n");
        }
        Role::Description => {
            user.push_str("Per-file summaries:\n\n");
            for (path, summary) in &ctx.file_summaries {
                let _ = writeln!(user, "### {path}\n{}\n", summary.trim());
            }
            user.push_str("Write one summary of the codebase as a whole.\n");
        }
        Role::Recommender => {
            user.push_str("Assessor outputs:\n\n");
            for agent in [CORRECTNESS_ASSESSOR, STYLE_ASSESSOR, DESCRIPTION_GENERATOR] {
                let out = ctx
                    .upstream
                    .get(agent)
                    .ok_or_else(|| ContextError::MissingUpstream(agent.to_string()))?;
                let _ = writeln!(user, "=== {agent} ===\n{}\n", out.raw_text.trim());
            }
            user.push_str("Findings after de-duplication:\n");
            user.push_str(&finding_list(&ctx.findings));
            user.push_str(
                "\nDe-duplicate overlapping findings, rank recommendations by severity and impact, \
                 and give at most ten concrete action items.\n",
            );
        }
        Role::Orchestrator => {
            let results: Vec<&ToolOutput> =
                tools.iter().filter(|t| !t.text.trim().is_empty()).collect();
            if results.is_empty() {
                return Err(ContextError::NoPipelineOutput);
            }
            for t in results {
                let _ = writeln!(user, "=== {} ===\n{}\n", t.tool, t.text.trim());
            }
        }
    }
    Ok(PromptRequest {
        agent_name: role.agent_name().to_string(),
        system_prompt,
        user_content: user,
        model_id: settings.model_id.clone(),
        max_output_chars: settings.max_output_chars,
        temperature: settings.temperature,
    })
}

/// Routes each agent to [`build_prompt`] by its name.
#[derive(Debug, Clone, Default)]
pub struct AssessmentPrompter {
    pub settings: PromptSettings,
}

impl AssessmentPrompter {
    pub fn new(settings: PromptSettings) -> Self {
        Self { settings }
    }
}

impl Prompter<AssessmentContext> for AssessmentPrompter {
    fn prompt(
        &self,
        agent: &AgentSpec,
        ctx: &AssessmentContext,
        tools: &[ToolOutput],
    ) -> Result<PromptRequest, AgentError> {
        let role = Role::from_agent_name(&agent.name)
            .ok_or_else(|| AgentError::Prompt(format!("no role for agent `{}`", agent.name)))?;
        let mut request = build_prompt(role, ctx, &self.settings, tools)
            .map_err(|e| AgentError::Prompt(e.to_string()))?;
        request.agent_name = agent.name.clone();
        Ok(request)
    }
}
