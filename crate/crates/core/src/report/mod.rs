//! Six-section report: assembly from a synthesis, Markdown rendering and a
//! small HTML renderer for the Markdown subset produced here.

mod html;
mod markdown;

use std::collections::BTreeMap;

use crate::assess::{Dimension, Finding, Recommendation, ScoreCard, Synthesis};
use crate::ingest::{language_for, CodeUnit};
use crate::lint::{summarize_diagnostics, LintCategory, LintResult};

pub use html::render_html;
pub use markdown::{escape_inline, escape_table_cell, render_markdown};

/// Section headings in report order.
pub const SECTIONS: [&str; 6] = [
    "Executive Summary",
    "Scores Table",
    "Correctness Analysis",
    "Style Analysis",
    "Improvement Recommendations",
    "Conclusion",
];

/// Lint messages listed per file in the correctness section.
pub const REPORT_LINT_TOP_N: usize = 10;
/// Longest code excerpt attached to a finding.
pub const SNIPPET_MAX_LINES: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportMeta {
    pub source: String,
    pub modality: String,
    pub files_assessed: usize,
    pub files_skipped: usize,
    /// `(full name, reference)` for repository inputs.
    pub repository: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSnippet {
    pub language: String,
    pub first_line: usize,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FindingEntry {
    pub finding: Finding,
    pub snippet: Option<CodeSnippet>,
}

/// Static-analysis digest for one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintOverview {
    pub unit_path: String,
    pub headline: String,
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub meta: ReportMeta,
    pub executive_summary: String,
    pub scores: ScoreCard,
    /// Only shown when more than one file was assessed.
    pub per_file: BTreeMap<String, ScoreCard>,
    pub lint: Vec<LintOverview>,
    pub correctness_findings: Vec<FindingEntry>,
    pub style_findings: Vec<FindingEntry>,
    pub recommendations: Vec<Recommendation>,
    pub conclusion: String,
    /// Failures the report was produced despite.
    pub degraded_flags: Vec<String>,
    /// Informational notes, such as missing static analysis.
    pub notices: Vec<String>,
}

impl Report {
    pub fn is_degraded(&self) -> bool {
        !self.degraded_flags.is_empty()
    }
}

fn snippet_for(finding: &Finding, units: &[CodeUnit]) -> Option<CodeSnippet> {
    let unit = units.iter().find(|u| u.rel_path == finding.unit_path)?;
    let first = *finding.lines.first()?;
    let last = (*finding.lines.last()?).min(first + SNIPPET_MAX_LINES - 1);
    let lines: Vec<&str> = unit.content.lines().collect();
    if first == 0 || first > lines.len() {
        return None;
    }
    let last = last.min(lines.len());
    Some(CodeSnippet {
        language: language_for(&unit.rel_path).to_string(),
        first_line: first,
        code: lines[first - 1..last].join("\n"),
    })
}

fn lint_overview(unit_path: &str, lint: &LintResult) -> LintOverview {
    match lint {
        LintResult::Diagnostics(ds) => {
            let summary = summarize_diagnostics(ds, REPORT_LINT_TOP_N);
            let counts: Vec<String> = LintCategory::ALL
                .iter()
                .map(|c| format!("{c} {}", summary.counts[c]))
                .collect();
            let mut headline = format!("{} messages ({})", summary.total, counts.join(", "));
            if summary.total > summary.top.len() {
                headline.push_str(&format!("; {} most severe shown", summary.top.len()));
            }
            LintOverview {
                unit_path: unit_path.to_string(),
                headline,
                messages: summary
                    .top
                    .iter()
                    .map(|d| format!("`{}` {} (line {}): {}", d.code, d.symbol, d.line, d.message))
                    .collect(),
            }
        }
        LintResult::RawFallback(raw) => LintOverview {
            unit_path: unit_path.to_string(),
            headline: "linter output could not be parsed".into(),
            messages: raw
                .lines()
                .take(REPORT_LINT_TOP_N)
                .map(str::to_string)
                .collect(),
        },
        LintResult::Unavailable { reason } => LintOverview {
            unit_path: unit_path.to_string(),
            headline: format!("static analysis unavailable ({reason})"),
            messages: Vec::new(),
        },
    }
}

/// Score extremes, the top action, any degradation, then the model's prose.
fn compose_conclusion(
    scores: &ScoreCard,
    recommendations: &[Recommendation],
    degraded: &[String],
    prose: Option<&str>,
) -> String {
    let mut best = scores.get(Dimension::Correctness);
    let mut worst = best;
    for s in scores.iter() {
        if s.value > best.value {
            best = s;
        }
        if s.value < worst.value {
            worst = s;
        }
    }
    let mut parts = Vec::new();
    if best.value == worst.value {
        parts.push(format!("All four dimensions score {:.1}/10.", best.value));
    } else {
        parts.push(format!(
            "The strongest dimension is {} ({:.1}/10) and the weakest is {} ({:.1}/10).",
            best.dimension.label(),
            best.value,
            worst.dimension.label(),
            worst.value
        ));
    }
    match recommendations.first() {
        Some(r) => parts.push(format!("Top priority: {}", r.action)),
        None => parts.push("No improvement actions were identified.".into()),
    }
    if !degraded.is_empty() {
        parts.push(format!("This report is degraded: {}.", degraded.join("; ")));
    }
    let mut text = parts.join(" ");
    if let Some(prose) = prose.map(str::trim).filter(|p| !p.is_empty()) {
        text.push_str("\n\n");
        text.push_str(prose);
    }
    text
}

/// Fill the six sections from a synthesis.
///
/// `conclusion_prose` is the report generator's text, if it produced any.
pub fn assemble_report(
    synthesis: &Synthesis,
    meta: ReportMeta,
    units: &[CodeUnit],
    conclusion_prose: Option<&str>,
    extra_degradations: &[String],
) -> Report {
    let entry = |f: &Finding| FindingEntry {
        finding: f.clone(),
        snippet: snippet_for(f, units),
    };
    let correctness_findings = synthesis
        .findings
        .iter()
        .filter(|f| matches!(f.dimension, Dimension::Correctness | Dimension::Security))
        .map(entry)
        .collect();
    let style_findings = synthesis
        .findings
        .iter()
        .filter(|f| matches!(f.dimension, Dimension::Style | Dimension::Maintainability))
        .map(entry)
        .collect();
    let mut degraded_flags = Vec::new();
    let mut notices = Vec::new();
    for d in &synthesis.degradations {
        let text = d.to_string();
        let bucket = if d.is_failure() {
            &mut degraded_flags
        } else {
            &mut notices
        };
        if !bucket.contains(&text) {
            bucket.push(text);
        }
    }
    degraded_flags.extend(extra_degradations.iter().cloned());
    let conclusion = compose_conclusion(
        &synthesis.scores,
        &synthesis.recommendations,
        &degraded_flags,
        conclusion_prose,
    );
    let executive_summary = if synthesis.description.trim().is_empty() {
        "No description was produced.".to_string()
    } else {
        synthesis.description.trim().to_string()
    };
    Report {
        title: format!("Code Quality Report: {}", meta.source),
        meta,
        executive_summary,
        scores: synthesis.scores.clone(),
        per_file: if synthesis.per_file.len() > 1 {
            synthesis.per_file.clone()
        } else {
            BTreeMap::new()
        },
        lint: synthesis
            .units
            .iter()
            .map(|u| lint_overview(&u.unit_path, &u.lint))
            .collect(),
        correctness_findings,
        style_findings,
        recommendations: synthesis.recommendations.clone(),
        conclusion,
        degraded_flags,
        notices,
    }
}
