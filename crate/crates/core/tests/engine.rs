mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use codeassay_core::assess::{Dimension, REPORT_GENERATOR};
use codeassay_core::config::{Config, OutputFormat, ProviderMode};
use codeassay_core::engine::{run_assessment, EngineError, RunSummary, Services};
use codeassay_core::memory::MemoryStore;
use codeassay_core::provider::{
    FinishReason, FixtureEntry, ModelProvider, ModelResponse, PromptRequest, ProviderError,
    ScriptedProvider, Usage,
};
use codeassay_core::report::SECTIONS;
use codeassay_core::runtime::{NullSink, VirtualClock};
use common::stub_linter::{fixture, StubLinter};

const GOLDEN: &str = "tests/golden/report.md";

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

struct Setup {
    cfg: Config,
    _out: tempfile::TempDir,
    _linter: StubLinter,
}

fn setup() -> Setup {
    let out = tempfile::tempdir().unwrap();
    let linter = StubLinter::new(&fixture("pylint_sample.json"), 20);
    let mut cfg = Config::default();
    cfg.provider.mode = ProviderMode::Scripted;
    cfg.lint = linter.config();
    cfg.output.dir = out.path().join("report");
    Setup {
        cfg,
        _out: out,
        _linter: linter,
    }
}

fn entries() -> Vec<FixtureEntry> {
    ScriptedProvider::load(&fixture_path("sample_session.jsonl"))
        .unwrap()
        .entries()
        .to_vec()
}

struct FnProvider<F>(F);

impl<F> ModelProvider for FnProvider<F>
where
    F: Fn(&PromptRequest) -> Result<ModelResponse, ProviderError> + Send + Sync,
{
    fn generate(&self, req: &PromptRequest) -> Result<ModelResponse, ProviderError> {
        (self.0)(req)
    }
}

fn run(
    target: &Path,
    cfg: &Config,
    entries: Vec<FixtureEntry>,
    memory: Option<&MemoryStore>,
) -> Result<RunSummary, EngineError> {
    run_with(
        target,
        cfg,
        Arc::new(ScriptedProvider::new(entries)),
        memory,
    )
}

fn run_with(
    target: &Path,
    cfg: &Config,
    provider: Arc<dyn ModelProvider>,
    memory: Option<&MemoryStore>,
) -> Result<RunSummary, EngineError> {
    let services = Services {
        provider,
        clock: Arc::new(VirtualClock::new()),
        sink: Arc::new(NullSink),
        env: BTreeMap::new(),
        memory,
        lint: true,
        seed: 7,
    };
    run_assessment(target.to_str().unwrap(), cfg, &services)
}

fn h2_headers(md: &str) -> Vec<&str> {
    md.lines().filter_map(|l| l.strip_prefix("## ")).collect()
}

#[test]
fn golden_report_is_stable() {
    let s = setup();
    let first = run(&fixture_path("sample.py"), &s.cfg, entries(), None).unwrap();
    let md = std::fs::read_to_string(s.cfg.output.dir.join("report.md")).unwrap();
    assert_eq!(md, first.markdown);
    let second = run(&fixture_path("sample.py"), &s.cfg, entries(), None).unwrap();
    assert_eq!(first.markdown, second.markdown);

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &md).unwrap();
    }
    assert_eq!(md, std::fs::read_to_string(&golden).unwrap());

    assert_eq!(h2_headers(&md), SECTIONS);
    assert!(!first.is_degraded(), "{:?}", first.degraded);
    assert_eq!(first.outputs.len(), 2);
    for line in fixture("sample_session.jsonl").lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["agent"] == "improvement_recommender" {
            for item in v["response"].as_str().unwrap().lines().skip(1) {
                let action = item.rsplit("] ").next().unwrap();
                assert!(md.contains(action), "missing action {action}");
            }
        }
    }
}

#[test]
fn golden_report_content() {
    let md = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN)).unwrap();
    let table: Vec<&str> = md
        .lines()
        .skip_while(|l| !l.starts_with("| Dimension"))
        .skip(2)
        .take_while(|l| l.starts_with('|'))
        .collect();
    assert_eq!(table.len(), 4);
    // Security: critical eval finding (-3), major pickle finding (-2).
    assert!(table[1].starts_with("| Security | 5.0 |"), "{}", table[1]);
    let correctness =
        &md[md.find("## Correctness Analysis").unwrap()..md.find("## Style Analysis").unwrap()];
    assert!(correctness.contains("`W0123`"));
    assert!(correctness.contains("sample.py:11"));
    assert!(correctness.contains("result = eval(cmd)"));
}

#[test]
fn html_output_is_balanced_and_escaped() {
    let s = setup();
    let summary = run(&fixture_path("sample.py"), &s.cfg, entries(), None).unwrap();
    let html = std::fs::read_to_string(
        summary
            .outputs
            .iter()
            .find(|p| p.ends_with("report.html"))
            .unwrap(),
    )
    .unwrap();
    assert_tags_balanced(&html);
    let tbody = &html[html.find("<tbody>").unwrap()..html.find("</tbody>").unwrap()];
    assert_eq!(tbody.matches("<tr>").count(), 4);
    assert!(html.contains("<code class=\"language-python\">"));
    assert!(html.contains("<h2>Scores Table</h2>"));
    assert!(!html.contains("<script"));
}

#[test]
fn model_text_cannot_inject_markup() {
    let s = setup();
    let mut e = entries();
    e.retain(|x| x.agent != REPORT_GENERATOR);
    e.push(FixtureEntry::response(
        REPORT_GENERATOR,
        "## Conclusion\nFine.\n<script>alert(1)</script>\n## Injected Section\n",
    ));
    let summary = run(&fixture_path("sample.py"), &s.cfg, e, None).unwrap();
    assert_eq!(h2_headers(&summary.markdown), SECTIONS);
    let html = std::fs::read_to_string(s.cfg.output.dir.join("report.html")).unwrap();
    assert!(!html.contains("<script>"));
    assert!(html.contains("&lt;script&gt;"));
    assert_tags_balanced(&html);
}

/// Strict open/close matching over the generated tag set.
fn assert_tags_balanced(html: &str) {
    const VOID: [&str; 3] = ["meta", "br", "!DOCTYPE"];
    let mut stack: Vec<String> = Vec::new();
    let mut rest = html;
    while let Some(open) = rest.find('<') {
        let close = rest[open..].find('>').expect("unterminated tag") + open;
        let tag = &rest[open + 1..close];
        let name: String = tag
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '!')
            .collect();
        if tag.starts_with('/') {
            assert_eq!(
                stack.pop().as_deref(),
                Some(name.as_str()),
                "unbalanced </{name}>"
            );
        } else if !VOID.contains(&name.as_str()) {
            stack.push(name);
        }
        rest = &rest[close + 1..];
    }
    assert!(stack.is_empty(), "unclosed: {stack:?}");
}

#[test]
fn directory_scores_match_weighted_mean() {
    let s = setup();
    let dir = tempfile::tempdir().unwrap();
    let sizes = [3usize, 12, 30];
    for (i, n) in sizes.iter().enumerate() {
        let body: String = (0..*n).map(|k| format!("x{k} = {k}\n")).collect();
        std::fs::write(dir.path().join(format!("m{i}.py")), body).unwrap();
    }
    // A different correctness score per file, chosen from the prompt.
    let scores = [2.0, 7.5, 9.0];
    let scripted = ScriptedProvider::new(entries());
    let provider = move |req: &PromptRequest| -> Result<ModelResponse, ProviderError> {
        if req.agent_name == "correctness_assessor" {
            let i = (0..3)
                .find(|i| req.user_content.contains(&format!("=== File: m{i}.py ")))
                .unwrap();
            return Ok(ModelResponse {
                text: format!("## Findings\n(none)\n## Score\n{}/10\nfile m{i}", scores[i]),
                finish_reason: FinishReason::Complete,
                usage: Usage::estimate(&req.user_content, ""),
            });
        }
        scripted.generate(req)
    };
    let summary = run_with(dir.path(), &s.cfg, Arc::new(FnProvider(provider)), None).unwrap();
    assert_eq!(summary.units_assessed, 3);
    let lines: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let oracle =
        scores.iter().zip(&lines).map(|(s, w)| s * w).sum::<f64>() / lines.iter().sum::<f64>();
    let oracle = (oracle * 10.0).round() / 10.0;
    assert!((summary.scores.get(Dimension::Correctness).value - oracle).abs() < 1e-9);
    assert!(summary.markdown.contains("Per-file scores"));
}

#[test]
fn missing_target_writes_nothing() {
    let s = setup();
    let err = run(Path::new("/nonexistent/target.py"), &s.cfg, entries(), None).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!s.cfg.output.dir.exists());
}

#[test]
fn recommender_failure_degrades() {
    let s = setup();
    let mut e: Vec<FixtureEntry> = entries()
        .into_iter()
        .filter(|x| x.agent != "improvement_recommender")
        .collect();
    e.push(FixtureEntry::failure(
        "improvement_recommender",
        Some(400),
        "bad request",
    ));
    let summary = run(&fixture_path("sample.py"), &s.cfg, e, None).unwrap();
    assert!(summary.is_degraded());
    assert_eq!(h2_headers(&summary.markdown), SECTIONS);
    assert!(summary.recommendations > 0);
    let conclusion = &summary.markdown[summary.markdown.find("## Conclusion").unwrap()..];
    assert!(conclusion.contains("This report is degraded"));
}

#[test]
fn all_assessors_failing_is_a_provider_error() {
    let s = setup();
    let e = [
        "correctness_assessor",
        "style_assessor",
        "description_generator",
    ]
    .iter()
    .map(|a| FixtureEntry::failure(*a, Some(401), "unauthorized"))
    .collect();
    let err = run(&fixture_path("sample.py"), &s.cfg, e, None).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(!s.cfg.output.dir.join("report.md").exists());
}

#[test]
fn remember_then_search() {
    let s = setup();
    let store = MemoryStore::new();
    assert!(store.search_memory("security", 3).unwrap().is_empty());
    let mut cfg = s.cfg.clone();
    cfg.output.formats = vec![OutputFormat::Markdown];
    let summary = run(&fixture_path("sample.py"), &cfg, entries(), Some(&store)).unwrap();
    let id = summary.session_id.unwrap();
    let hits = store.search_memory("explicit command table", 5).unwrap();
    assert_eq!(hits[0].session_id, id);
    assert_eq!(hits[0].relevance, 1.0);
}
