//! End-to-end assessment: agent tree construction, ingestion, static
//! analysis, per-unit fan-out, synthesis, report rendering and output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use thiserror::Error;

use crate::assess::{
    assess_unit, parse_structured_output, synthesize, AggregateError, AssessmentContext,
    AssessmentPrompter, ChunkRun, Degradation, Role, ScoreCard, Synthesis, UnitAssessment,
    DESCRIPTION_GENERATOR, IMPROVEMENT_RECOMMENDER, REPORT_GENERATOR,
};
use crate::config::{Config, ConfigError, OutputFormat};
use crate::exec::Execution;
use crate::ingest::{
    chunk_unit, enumerate_directory, fetch_repository, load_file, resolve_input, Chunk, CodeUnit,
    IngestError, Modality, RepoClient, SkipReason, SkippedFile, SourceSpec,
};
use crate::lint::{run_linter, LintError, LintResult};
use crate::memory::{MemoryError, MemoryStore, SessionRecord};
use crate::provider::ModelProvider;
use crate::report::{assemble_report, render_html, render_markdown, Report, ReportMeta};
use crate::runtime::{
    AgentOutput, AgentSpec, Clock, CompositionNode, EventKind, EventSink, OutputMap, RunError,
    RunEvent, Runner, Tool,
};

/// Tool through which the report generator runs the whole pipeline.
pub const PIPELINE_TOOL: &str = "assessment_pipeline";
/// Fan-out node holding the three assessors.
pub const PARALLEL_GROUP: &str = "parallel_assessment";

const INGEST_STAGE: &str = "ingest";
const LINT_STAGE: &str = "static_analysis";
const RENDER_STAGE: &str = "render";

/// The orchestrator leaf and the pipeline it calls as a tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentTree {
    pub root: CompositionNode,
    /// `sequential([parallel([correctness, style, description]), recommender])`.
    pub pipeline: CompositionNode,
}

impl AgentTree {
    /// Every agent, root first.
    pub fn agents(&self) -> Vec<&AgentSpec> {
        let mut all = self.root.leaves();
        all.extend(self.pipeline.leaves());
        all
    }

    /// Agents per layer: the orchestrator, then the agents it reaches
    /// through its tool.
    pub fn layers(&self) -> Vec<Vec<&str>> {
        vec![
            self.root.leaves().iter().map(|a| a.name.as_str()).collect(),
            self.pipeline
                .leaves()
                .iter()
                .map(|a| a.name.as_str())
                .collect(),
        ]
    }

    pub fn parallel_group(&self) -> Option<&CompositionNode> {
        self.pipeline.named_nodes().get(PARALLEL_GROUP).copied()
    }
}

fn agent(role: Role, description: &str) -> CompositionNode {
    CompositionNode::leaf(
        AgentSpec::new(role.agent_name(), description)
            .with_contract(role.contract().iter().copied()),
    )
}

/// Five agents in two layers; the shape does not depend on `cfg` beyond
/// its validity.
pub fn build_agent_tree(cfg: &Config) -> Result<AgentTree, ConfigError> {
    cfg.validate()?;
    let invalid = |e: RunError| ConfigError::Invalid {
        field: "agent tree".into(),
        reason: e.to_string(),
    };
    let parallel = CompositionNode::parallel(
        PARALLEL_GROUP,
        vec![
            agent(
                Role::Correctness,
                "Assess logical correctness, grounded in static analysis.",
            ),
            agent(
                Role::Style,
                "Assess style, readability and maintainability.",
            ),
            agent(Role::Description, "Summarise what the code does."),
        ],
    )
    .map_err(invalid)?;
    let pipeline = CompositionNode::sequential(
        PIPELINE_TOOL,
        vec![
            parallel,
            agent(
                Role::Recommender,
                "Turn assessor output into a ranked action plan.",
            ),
        ],
    )
    .map_err(invalid)?;
    let root = CompositionNode::leaf(
        AgentSpec::new(
            REPORT_GENERATOR,
            "Run the assessment pipeline and conclude the report.",
        )
        .with_contract(Role::Orchestrator.contract().iter().copied())
        .with_tool(PIPELINE_TOOL),
    );
    Ok(AgentTree { root, pipeline })
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("no assessable files found in {0}")]
    NoUnits(String),
    #[error("static analysis failed: {0}")]
    Lint(#[from] LintError),
    #[error("model provider failed: {0}")]
    Provider(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl EngineError {
    /// 2 for input problems, 3 for provider failures, 4 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Ingest(_) | EngineError::NoUnits(_) => 2,
            EngineError::Provider(_) => 3,
            EngineError::Config(_) => 1,
            _ => 4,
        }
    }
}

/// Process-level collaborators of a run.
pub struct Services<'a> {
    pub provider: Arc<dyn ModelProvider>,
    pub clock: Arc<dyn Clock>,
    pub sink: Arc<dyn EventSink>,
    /// Source of tokens named in the config (API key, repository token).
    pub env: BTreeMap<String, String>,
    /// Store to remember the session in, when requested.
    pub memory: Option<&'a MemoryStore>,
    pub lint: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub source: String,
    pub units_assessed: usize,
    pub files_skipped: usize,
    pub findings: usize,
    pub recommendations: usize,
    pub scores: ScoreCard,
    /// On the services clock.
    pub duration: Duration,
    pub degraded: Vec<String>,
    pub notices: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub session_id: Option<String>,
    pub markdown: String,
}

impl RunSummary {
    pub fn is_degraded(&self) -> bool {
        !self.degraded.is_empty()
    }
}

struct Ingested {
    spec: SourceSpec,
    units: Vec<CodeUnit>,
    skipped: Vec<SkippedFile>,
    repository: Option<(String, String)>,
}

fn ingest(
    spec: SourceSpec,
    cfg: &Config,
    services: &Services<'_>,
    execution: Execution,
) -> Result<Ingested, EngineError> {
    let (units, skipped, repository) = match &spec {
        SourceSpec::File(path) => (vec![load_file(path)?], Vec::new(), None),
        SourceSpec::Directory(root) => {
            let listing = enumerate_directory(root, &cfg.ingest)?;
            (listing.units, listing.skipped, None)
        }
        SourceSpec::Repository { .. } => {
            let client = RepoClient::new(cfg.repo_client(&services.env))
                .with_policy(cfg.retry)
                .with_clock(services.clock.clone())
                .with_sink(services.sink.clone())
                .with_seed(services.seed)
                .with_execution(execution);
            let fetch = fetch_repository(&spec, &cfg.ingest, &client)?;
            let repo = Some((fetch.metadata.full_name.clone(), fetch.reference.clone()));
            (fetch.units, fetch.skipped, repo)
        }
    };
    let (units, empty): (Vec<CodeUnit>, Vec<CodeUnit>) = units
        .into_iter()
        .partition(|u| !u.content.trim().is_empty());
    let mut skipped = skipped;
    skipped.extend(empty.into_iter().map(|u| SkippedFile {
        path: u.rel_path,
        reason: SkipReason::Unreadable("empty file".into()),
    }));
    if units.is_empty() {
        return Err(EngineError::NoUnits(spec.to_string()));
    }
    Ok(Ingested {
        spec,
        units,
        skipped,
        repository,
    })
}

/// One unit ready for the assessors.
#[derive(Debug, Clone)]
struct UnitPlan {
    unit: CodeUnit,
    /// `None` when the unit fits one request.
    chunks: Option<Vec<Chunk>>,
    lint: LintResult,
}

fn lint_unit(unit: &CodeUnit, cfg: &Config, enabled: bool) -> Result<LintResult, LintError> {
    if !enabled {
        return Ok(LintResult::Unavailable {
            reason: "disabled for this run".into(),
        });
    }
    match run_linter(&unit.content, &cfg.lint) {
        Ok(result) => Ok(result),
        Err(e) if cfg.lint.required => Err(e),
        Err(e) => Ok(LintResult::Unavailable {
            reason: e.to_string(),
        }),
    }
}

fn plan_units(
    units: Vec<CodeUnit>,
    cfg: &Config,
    services: &Services<'_>,
    execution: Execution,
) -> Result<(Vec<UnitPlan>, Vec<SkippedFile>), EngineError> {
    emit(
        services,
        LINT_STAGE,
        EventKind::Started,
        format!("{} files", units.len()),
    );
    let linted = execution.map_bounded(&units, cfg.concurrency.units, |u| {
        lint_unit(u, cfg, services.lint)
    });
    let mut plans = Vec::new();
    let mut skipped = Vec::new();
    for (unit, lint) in units.into_iter().zip(linted) {
        let lint = match lint {
            Ok(l) => l,
            Err(e) => {
                emit(services, LINT_STAGE, EventKind::Failed, e.to_string());
                return Err(e.into());
            }
        };
        let chunks = if unit.content.chars().count() > cfg.chunking.max_chars {
            match chunk_unit(&unit, cfg.chunking.max_chars, cfg.chunking.overlap_lines) {
                Ok(chunks) => Some(chunks),
                Err(e) => {
                    skipped.push(SkippedFile {
                        path: unit.rel_path.clone(),
                        reason: SkipReason::Unreadable(e.to_string()),
                    });
                    continue;
                }
            }
        } else {
            None
        };
        plans.push(UnitPlan { unit, chunks, lint });
    }
    emit(
        services,
        LINT_STAGE,
        EventKind::Completed,
        format!("{} files", plans.len()),
    );
    Ok((plans, skipped))
}

fn emit(services: &Services<'_>, stage: &str, kind: EventKind, payload: String) {
    services.sink.emit(RunEvent {
        timestamp: services.clock.now(),
        agent_name: stage.to_string(),
        kind,
        payload,
    });
}

/// Runs the parallel group per chunk of every unit, then the recommender
/// and, for several units, one codebase-level description.
struct PipelineTool {
    plans: Vec<UnitPlan>,
    cfg: Config,
    execution: Execution,
    outcome: Mutex<Option<Result<Synthesis, EngineError>>>,
}

impl PipelineTool {
    fn unit_context(
        base: &AssessmentContext,
        plan: &UnitPlan,
        chunk: Option<&Chunk>,
    ) -> AssessmentContext {
        let mut ctx = AssessmentContext::new(base.source.clone());
        ctx.units = vec![plan.unit.clone()];
        if let Some(c) = chunk {
            ctx.chunks
                .insert(plan.unit.rel_path.clone(), vec![c.clone()]);
        }
        ctx.lint_results
            .insert(plan.unit.rel_path.clone(), plan.lint.clone());
        ctx
    }

    fn assess(
        &self,
        runner: &Runner<AssessmentContext>,
        base: &AssessmentContext,
        plan: &UnitPlan,
    ) -> Result<(UnitAssessment, Vec<ChunkRun>), RunError> {
        let spans: Vec<Option<&Chunk>> = match &plan.chunks {
            Some(chunks) => chunks.iter().map(Some).collect(),
            None => vec![None],
        };
        let mut runs = Vec::with_capacity(spans.len());
        for chunk in spans {
            let ctx = Self::unit_context(base, plan, chunk);
            let span = chunk.map_or((1, plan.unit.line_count.max(1)), |c| {
                (c.start_line, c.end_line)
            });
            let run = match runner.run_agent(PARALLEL_GROUP, &ctx) {
                Ok(outputs) => ChunkRun {
                    span,
                    outputs,
                    failures: Vec::new(),
                },
                Err(RunError::Failed { failures, partial }) => ChunkRun {
                    span,
                    outputs: partial,
                    failures: failures
                        .into_iter()
                        .map(|f| (f.agent, f.error.to_string()))
                        .collect(),
                },
                Err(other) => return Err(other),
            };
            runs.push(run);
        }
        let assessed = assess_unit(
            &plan.unit,
            &runs,
            plan.lint.clone(),
            &self.cfg.security,
            self.cfg.prompt.lint_top_n,
        );
        Ok((assessed, runs))
    }

    fn run(
        &self,
        runner: &Runner<AssessmentContext>,
        ctx: &AssessmentContext,
    ) -> Result<Synthesis, EngineError> {
        let results = self
            .execution
            .map_bounded(&self.plans, self.cfg.concurrency.units, |plan| {
                self.assess(runner, ctx, plan)
            });
        let mut units = Vec::new();
        let mut all_runs = Vec::new();
        for (plan, result) in self.plans.iter().zip(results) {
            let (assessed, runs) = result.map_err(|e| EngineError::Internal(e.to_string()))?;
            units.push(assessed);
            all_runs.push((plan, runs));
        }
        let any_output = all_runs
            .iter()
            .any(|(_, runs)| runs.iter().any(|r| !r.outputs.is_empty()));
        if !any_output {
            let reasons: Vec<String> = all_runs
                .iter()
                .flat_map(|(_, runs)| runs.iter().flat_map(|r| r.failures.iter()))
                .map(|(agent, reason)| format!("{agent}: {reason}"))
                .collect();
            return Err(EngineError::Provider(format!(
                "no assessor succeeded ({})",
                reasons.join("; ")
            )));
        }

        let upstream = combined_upstream(&all_runs);
        let mut synthesis = synthesize(units, |findings| {
            let mut rctx = ctx.clone();
            rctx.upstream = upstream.clone();
            rctx.findings = findings.to_vec();
            runner
                .run_agent(IMPROVEMENT_RECOMMENDER, &rctx)
                .map_err(|e| e.to_string())?
                .remove(IMPROVEMENT_RECOMMENDER)
                .ok_or_else(|| "recommender produced no output".to_string())
        })?;

        if synthesis.units.len() > 1 {
            let mut dctx = ctx.clone();
            dctx.file_summaries = synthesis
                .units
                .iter()
                .filter_map(|u| u.summary.as_ref().map(|s| (u.unit_path.clone(), s.clone())))
                .collect();
            if dctx.file_summaries.is_empty() {
                synthesis.degradations.push(Degradation::DescriptionFailed {
                    reason: "no per-file summaries were produced".into(),
                });
            } else {
                match runner.run_agent(DESCRIPTION_GENERATOR, &dctx) {
                    Ok(mut out) => {
                        let parsed = out
                            .remove(DESCRIPTION_GENERATOR)
                            .map(|o| parse_structured_output(&o, Role::Description, ""));
                        match parsed.and_then(|p| p.summary.filter(|s| !s.trim().is_empty())) {
                            Some(summary) => synthesis.description = summary,
                            None => synthesis.degradations.push(Degradation::ParseWarning {
                                agent: DESCRIPTION_GENERATOR.into(),
                                unit: "the codebase".into(),
                            }),
                        }
                    }
                    Err(e) => synthesis.degradations.push(Degradation::DescriptionFailed {
                        reason: e.to_string(),
                    }),
                }
            }
        }
        Ok(synthesis)
    }
}

/// One output per assessor covering every unit and chunk, for the
/// recommender prompt.
fn combined_upstream(all_runs: &[(&UnitPlan, Vec<ChunkRun>)]) -> OutputMap {
    let single = all_runs.len() == 1 && all_runs[0].1.len() == 1;
    let mut out = OutputMap::new();
    for role in [Role::Correctness, Role::Style, Role::Description] {
        let name = role.agent_name();
        let mut text = String::new();
        for (plan, runs) in all_runs {
            for run in runs {
                let body = match run.outputs.get(name) {
                    Some(o) => o.raw_text.trim().to_string(),
                    None => {
                        let reason = run
                            .failures
                            .iter()
                            .find(|(a, _)| a == name)
                            .map_or("no output", |(_, r)| r.as_str());
                        format!("(assessor failed: {reason})")
                    }
                };
                if single {
                    text = body;
                } else {
                    let _ = writeln!(
                        text,
                        "### {} (lines {}-{})\n{}\n",
                        plan.unit.rel_path, run.span.0, run.span.1, body
                    );
                }
            }
        }
        let contract: Vec<String> = role.contract().iter().map(|s| s.to_string()).collect();
        out.insert(
            name.to_string(),
            AgentOutput::from_text(name, text, &contract),
        );
    }
    out
}

impl Tool<AssessmentContext> for PipelineTool {
    fn invoke(
        &self,
        runner: &Runner<AssessmentContext>,
        ctx: &AssessmentContext,
    ) -> Result<String, RunError> {
        let outcome = self.run(runner, ctx);
        let text = match &outcome {
            Ok(s) => pipeline_digest(s),
            Err(e) => e.to_string(),
        };
        let failed = outcome.is_err();
        *self.outcome.lock().expect("pipeline outcome poisoned") = Some(outcome);
        if failed {
            Err(RunError::InvalidComposition(text))
        } else {
            Ok(text)
        }
    }
}

/// What the report generator sees of the pipeline.
fn pipeline_digest(s: &Synthesis) -> String {
    let mut out = String::from("Scores (0-10):\n");
    for score in s.scores.iter() {
        let _ = writeln!(
            out,
            "- {}: {:.1} ({})",
            score.dimension.label(),
            score.value,
            score.rationale
        );
    }
    let _ = writeln!(out, "\nFindings after de-duplication: {}", s.findings.len());
    for f in s.findings.iter().take(15) {
        let _ = writeln!(
            out,
            "- [{}] [{}] {}: {}",
            f.severity,
            f.dimension,
            f.location(),
            f.description
        );
    }
    out.push_str("\nRanked recommendations:\n");
    for r in &s.recommendations {
        let _ = writeln!(
            out,
            "{}. [{}, {}] {}",
            r.rank, r.severity, r.impact, r.action
        );
    }
    let _ = writeln!(out, "\nDescription:\n{}", s.description.trim());
    out
}

/// Write every file to a temporary sibling first, then rename them all, so
/// a failure leaves no half-written report behind.
fn write_outputs(dir: &Path, files: &[(PathBuf, String)]) -> Result<Vec<PathBuf>, EngineError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EngineError::Output { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged = Vec::new();
    for (path, text) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
        tmp.write_all(text.as_bytes()).map_err(io_err(path))?;
        tmp.as_file().sync_all().map_err(io_err(path))?;
        staged.push((tmp.into_temp_path(), path.clone()));
    }
    let mut written = Vec::new();
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| EngineError::Output {
            path: path.clone(),
            source: e.error,
        })?;
        written.push(path);
    }
    Ok(written)
}

fn modality_label(m: Modality) -> &'static str {
    match m {
        Modality::File => "file",
        Modality::Directory => "directory",
        Modality::RepoUrl => "repository",
    }
}

/// Resolve, ingest, lint, assess, synthesize, render and write one report.
pub fn run_assessment(
    target: &str,
    cfg: &Config,
    services: &Services<'_>,
) -> Result<RunSummary, EngineError> {
    let started = services.clock.now();
    let tree = build_agent_tree(cfg)?;
    let execution = if cfg.concurrency.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    };

    emit(
        services,
        INGEST_STAGE,
        EventKind::Started,
        target.to_string(),
    );
    let ingested = resolve_input(target)
        .map_err(EngineError::from)
        .and_then(|spec| ingest(spec, cfg, services, execution));
    let ingested = match ingested {
        Ok(i) => i,
        Err(e) => {
            emit(services, INGEST_STAGE, EventKind::Failed, e.to_string());
            return Err(e);
        }
    };
    emit(
        services,
        INGEST_STAGE,
        EventKind::Completed,
        format!(
            "{} files, {} skipped",
            ingested.units.len(),
            ingested.skipped.len()
        ),
    );

    let (plans, chunk_skipped) = plan_units(ingested.units.clone(), cfg, services, execution)?;
    let mut skipped = ingested.skipped.clone();
    skipped.extend(chunk_skipped);
    if plans.is_empty() {
        return Err(EngineError::NoUnits(ingested.spec.to_string()));
    }
    let units: Vec<CodeUnit> = plans.iter().map(|p| p.unit.clone()).collect();

    let mut runner = Runner::new(
        services.provider.clone(),
        Arc::new(AssessmentPrompter::new(cfg.prompt_settings())),
    )
    .with_policy(cfg.retry)
    .with_clock(services.clock.clone())
    .with_sink(services.sink.clone())
    .with_seed(services.seed)
    .with_execution(execution);
    runner
        .register(&tree.root)
        .map_err(|e| EngineError::Internal(e.to_string()))?;
    runner
        .register(&tree.pipeline)
        .map_err(|e| EngineError::Internal(e.to_string()))?;
    let tool = Arc::new(PipelineTool {
        plans: plans.clone(),
        cfg: cfg.clone(),
        execution,
        outcome: Mutex::new(None),
    });
    runner.register_tool(PIPELINE_TOOL, tool.clone());

    let mut ctx = AssessmentContext::new(ingested.spec.clone());
    ctx.units = units.clone();
    ctx.lint_results = plans
        .iter()
        .map(|p| (p.unit.rel_path.clone(), p.lint.clone()))
        .collect();

    let root = runner.run_agent(REPORT_GENERATOR, &ctx);
    let outcome = tool
        .outcome
        .lock()
        .expect("pipeline outcome poisoned")
        .take()
        .ok_or_else(|| EngineError::Internal("assessment pipeline did not run".into()))?;
    let synthesis = outcome?;
    let mut extra = Vec::new();
    let prose = match root {
        Ok(mut outputs) => outputs.remove(REPORT_GENERATOR).map(|o| {
            o.section(crate::assess::CONCLUSION_HEADER)
                .map(str::to_string)
                .unwrap_or_else(|| o.raw_text.trim().to_string())
        }),
        Err(e) => {
            extra.push(
                Degradation::OrchestratorFailed {
                    reason: e.to_string(),
                }
                .to_string(),
            );
            None
        }
    };

    emit(services, RENDER_STAGE, EventKind::Started, String::new());
    let meta = ReportMeta {
        source: ingested.spec.display_name(),
        modality: modality_label(ingested.spec.modality()).into(),
        files_assessed: units.len(),
        files_skipped: skipped.len(),
        repository: ingested.repository.clone(),
    };
    let report: Report = assemble_report(&synthesis, meta, &units, prose.as_deref(), &extra);
    let markdown = render_markdown(&report);
    let mut formats = cfg.output.formats.clone();
    formats.sort();
    formats.dedup();
    let files: Vec<(PathBuf, String)> = formats
        .iter()
        .map(|f| {
            let text = match f {
                OutputFormat::Markdown => markdown.clone(),
                OutputFormat::Html => render_html(&markdown),
            };
            (cfg.output.dir.join(f.file_name()), text)
        })
        .collect();
    let outputs = write_outputs(&cfg.output.dir, &files)?;
    emit(
        services,
        RENDER_STAGE,
        EventKind::Completed,
        format!("{} files", outputs.len()),
    );

    let session_id = match services.memory {
        Some(store) => {
            let id = format!("session-{:04}", store.len() + 1);
            store.add_session_to_memory(SessionRecord::new(
                id.clone(),
                ingested.spec.to_string(),
                markdown.clone(),
                services.clock.now(),
            ))?;
            Some(id)
        }
        None => None,
    };

    Ok(RunSummary {
        source: ingested.spec.to_string(),
        units_assessed: units.len(),
        files_skipped: skipped.len(),
        findings: synthesis.findings.len(),
        recommendations: synthesis.recommendations.len(),
        scores: synthesis.scores.clone(),
        duration: services.clock.now().saturating_sub(started),
        degraded: report.degraded_flags.clone(),
        notices: report.notices.clone(),
        outputs,
        session_id,
        markdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assess::{CORRECTNESS_ASSESSOR, STYLE_ASSESSOR};
    use crate::config::ProviderMode;

    fn scripted() -> Config {
        let mut cfg = Config::default();
        cfg.provider.mode = ProviderMode::Scripted;
        cfg
    }

    #[test]
    fn tree_shape() {
        let tree = build_agent_tree(&scripted()).unwrap();
        let names: Vec<&str> = tree.agents().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(
            names,
            [
                REPORT_GENERATOR,
                CORRECTNESS_ASSESSOR,
                STYLE_ASSESSOR,
                DESCRIPTION_GENERATOR,
                IMPROVEMENT_RECOMMENDER
            ]
        );
        assert_eq!(
            tree.layers().iter().map(Vec::len).collect::<Vec<_>>(),
            [1, 4]
        );
        assert_eq!(tree.parallel_group().unwrap().children().len(), 3);
        assert_eq!(tree.root.leaves()[0].tools, [PIPELINE_TOOL]);
    }

    #[test]
    fn tree_needs_live_settings() {
        let err = build_agent_tree(&Config::default()).unwrap_err();
        assert!(err.to_string().contains("provider.model_id"));
    }

    #[test]
    fn exit_classes() {
        assert_eq!(EngineError::NoUnits("x".into()).exit_code(), 2);
        assert_eq!(EngineError::Provider("x".into()).exit_code(), 3);
        assert_eq!(EngineError::Internal("x".into()).exit_code(), 4);
    }
}
