use std::collections::BTreeMap;
use std::fmt;

use super::parse::{parse_structured_output, ParsedOutput};
use super::rank::{
    heuristic_recommendations, parse_recommendations, rank_recommendations, Recommendation,
};
use super::score::{
    aggregate_file_scores, derive_security_score, findings_heuristic_score, AggregateError,
    ScoreCard, SecurityRules,
};
use super::{
    deduplicate_findings, Dimension, DimensionScore, Finding, Role, CORRECTNESS_ASSESSOR,
    DESCRIPTION_GENERATOR, RECOMMENDATIONS_HEADER, STYLE_ASSESSOR,
};
use crate::ingest::CodeUnit;
use crate::lint::{summarize_diagnostics, LintResult};
use crate::runtime::{extract_section, AgentOutput, OutputMap};

/// Something that went wrong or was unavailable while still producing a
/// report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Degradation {
    AssessorFailed {
        agent: String,
        unit: String,
        reason: String,
    },
    ParseWarning {
        agent: String,
        unit: String,
    },
    StaticAnalysisUnavailable {
        reason: String,
    },
    StaticAnalysisUnparsed {
        unit: String,
    },
    RecommenderFailed {
        reason: String,
    },
    RecommenderUnparsed,
    DescriptionFailed {
        reason: String,
    },
    OrchestratorFailed {
        reason: String,
    },
}

impl Degradation {
    /// Notices about missing tooling do not make a report degraded.
    pub fn is_failure(&self) -> bool {
        !matches!(
            self,
            Degradation::StaticAnalysisUnavailable { .. }
                | Degradation::StaticAnalysisUnparsed { .. }
        )
    }
}

impl fmt::Display for Degradation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degradation::AssessorFailed { agent, unit, reason } => write!(f, "{agent} failed on {unit}: {reason}"),
            Degradation::ParseWarning { agent, unit } => {
                write!(f, "{agent} output for {unit} was missing required sections")
            }
            Degradation::StaticAnalysisUnavailable { reason } => write!(f, "static analysis unavailable: {reason}"),
            Degradation::StaticAnalysisUnparsed { unit } => {
                write!(f, "static analysis output for {unit} could not be parsed")
            }
            Degradation::RecommenderFailed { reason } => {
                write!(f, "improvement recommender failed ({reason}); recommendations derived from findings")
            }
            Degradation::RecommenderUnparsed => {
                f.write_str("improvement recommender output had no recommendations section; recommendations derived from findings")
            }
            Degradation::DescriptionFailed { reason } => write!(f, "codebase description failed: {reason}"),
            Degradation::OrchestratorFailed { reason } => write!(f, "report generator failed: {reason}"),
        }
    }
}

/// One chunk's pass through the parallel assessment group.
#[derive(Debug, Clone, Default)]
pub struct ChunkRun {
    /// Lines covered, 1-based inclusive.
    pub span: (usize, usize),
    pub outputs: OutputMap,
    /// `(agent, reason)` for assessors that failed terminally.
    pub failures: Vec<(String, String)>,
}

/// Parsed results for one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitAssessment {
    pub unit_path: String,
    pub line_count: usize,
    /// Correctness findings first, security-tagged, then style findings.
    pub findings: Vec<Finding>,
    pub scores: ScoreCard,
    pub summary: Option<String>,
    /// Assessor prose outside the contract sections, per agent.
    pub notes: BTreeMap<String, String>,
    pub lint: LintResult,
    pub degradations: Vec<Degradation>,
}

impl UnitAssessment {
    pub fn findings_in(&self, dimensions: &[Dimension]) -> impl Iterator<Item = &Finding> {
        let dims = dimensions.to_vec();
        self.findings
            .iter()
            .filter(move |f| dims.contains(&f.dimension))
    }
}

/// Line-weighted mean of the chunk scores, exact on tenths.
fn chunk_mean(dimension: Dimension, scored: &[(usize, DimensionScore)]) -> Option<DimensionScore> {
    match scored {
        [] => None,
        [(_, only)] => Some(only.clone()),
        _ => {
            let total: i128 = scored.iter().map(|(w, _)| *w as i128).sum::<i128>().max(1);
            let sum: i128 = scored
                .iter()
                .map(|(w, s)| *w as i128 * s.tenths() as i128)
                .sum();
            let tenths = (2 * sum + total).div_euclid(2 * total);
            Some(DimensionScore::new(
                dimension,
                tenths as f64 / 10.0,
                format!(
                    "line-weighted over {} chunks; {}",
                    scored.len(),
                    scored[0].1.rationale
                ),
            ))
        }
    }
}

/// Parse one unit's assessor outputs into findings, scores and a summary.
pub fn assess_unit(
    unit: &CodeUnit,
    runs: &[ChunkRun],
    lint: LintResult,
    rules: &SecurityRules,
    lint_top_n: usize,
) -> UnitAssessment {
    let path = unit.rel_path.as_str();
    let mut degradations = Vec::new();
    let mut correctness_findings = Vec::new();
    let mut style_findings = Vec::new();
    let mut scored: BTreeMap<Dimension, Vec<(usize, DimensionScore)>> = BTreeMap::new();
    let mut summaries = Vec::new();
    let mut notes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut failed: BTreeMap<&str, bool> = BTreeMap::new();

    for run in runs {
        let weight = run.span.1.saturating_sub(run.span.0) + 1;
        for (agent, reason) in &run.failures {
            failed.insert(
                match agent.as_str() {
                    CORRECTNESS_ASSESSOR => CORRECTNESS_ASSESSOR,
                    STYLE_ASSESSOR => STYLE_ASSESSOR,
                    _ => DESCRIPTION_GENERATOR,
                },
                true,
            );
            degradations.push(Degradation::AssessorFailed {
                agent: agent.clone(),
                unit: path.to_string(),
                reason: reason.clone(),
            });
        }
        for role in [Role::Correctness, Role::Style, Role::Description] {
            let Some(out) = run.outputs.get(role.agent_name()) else {
                continue;
            };
            let parsed: ParsedOutput = parse_structured_output(out, role, path);
            if parsed.parse_warning {
                degradations.push(Degradation::ParseWarning {
                    agent: role.agent_name().to_string(),
                    unit: path.to_string(),
                });
            }
            for score in parsed.scores {
                scored
                    .entry(score.dimension)
                    .or_default()
                    .push((weight, score));
            }
            if !parsed.free_text.is_empty() {
                notes
                    .entry(role.agent_name().to_string())
                    .or_default()
                    .push(parsed.free_text);
            }
            match role {
                Role::Correctness => correctness_findings.extend(parsed.findings),
                Role::Style => style_findings.extend(parsed.findings),
                _ => summaries.extend(parsed.summary.filter(|s| !s.is_empty())),
            }
        }
    }

    rules.tag(&mut correctness_findings);
    let mut findings = correctness_findings;
    findings.extend(style_findings);

    let lint_summary = match &lint {
        LintResult::Diagnostics(ds) => Some(summarize_diagnostics(ds, lint_top_n)),
        LintResult::RawFallback(_) => {
            degradations.push(Degradation::StaticAnalysisUnparsed {
                unit: path.to_string(),
            });
            None
        }
        LintResult::Unavailable { reason } => {
            degradations.push(Degradation::StaticAnalysisUnavailable {
                reason: reason.clone(),
            });
            None
        }
    };

    let score_for = |dim: Dimension, agent: &str| {
        chunk_mean(dim, scored.get(&dim).map(Vec::as_slice).unwrap_or(&[])).unwrap_or_else(|| {
            let reason = if failed.contains_key(agent) {
                "assessor unavailable"
            } else {
                "no score reported"
            };
            findings_heuristic_score(dim, &findings, reason)
        })
    };
    let scores = ScoreCard {
        correctness: score_for(Dimension::Correctness, CORRECTNESS_ASSESSOR),
        security: derive_security_score(
            &findings
                .iter()
                .filter(|f| matches!(f.dimension, Dimension::Correctness | Dimension::Security))
                .cloned()
                .collect::<Vec<_>>(),
            lint_summary.as_ref(),
            rules,
        ),
        style: score_for(Dimension::Style, STYLE_ASSESSOR),
        maintainability: score_for(Dimension::Maintainability, STYLE_ASSESSOR),
    };

    UnitAssessment {
        unit_path: path.to_string(),
        line_count: unit.line_count,
        findings,
        scores,
        summary: (!summaries.is_empty()).then(|| summaries.join("\n\n")),
        notes: notes
            .into_iter()
            .map(|(k, v)| (k, v.join("\n\n")))
            .collect(),
        lint,
        degradations,
    }
}

/// Cross-unit results ready for report assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub units: Vec<UnitAssessment>,
    pub description: String,
    /// De-duplicated across every unit, in first-occurrence order.
    pub findings: Vec<Finding>,
    pub per_file: BTreeMap<String, ScoreCard>,
    pub scores: ScoreCard,
    pub recommendations: Vec<Recommendation>,
    pub degradations: Vec<Degradation>,
}

impl Synthesis {
    pub fn is_degraded(&self) -> bool {
        self.degradations.iter().any(Degradation::is_failure)
    }

    pub fn static_analysis_available(&self) -> bool {
        self.units.iter().all(|u| u.lint.linter_available())
    }
}

/// Merge unit results: de-duplicate findings, ask the recommender (via
/// `recommend`) for an action plan, rank and cap it, and aggregate scores.
///
/// A failed or unparseable recommender reply falls back to actions built
/// from the findings and marks the synthesis degraded.
pub fn synthesize<R>(units: Vec<UnitAssessment>, recommend: R) -> Result<Synthesis, AggregateError>
where
    R: FnOnce(&[Finding]) -> Result<AgentOutput, String>,
{
    let all: Vec<Finding> = units
        .iter()
        .flat_map(|u| u.findings.iter().cloned())
        .collect();
    let findings = deduplicate_findings(&all);
    let mut degradations: Vec<Degradation> = units
        .iter()
        .flat_map(|u| u.degradations.iter().cloned())
        .collect();
    degradations.dedup();

    let drafts = match recommend(&findings) {
        Ok(out) => match out
            .section(RECOMMENDATIONS_HEADER)
            .map(str::to_string)
            .or_else(|| extract_section(&out.raw_text, RECOMMENDATIONS_HEADER))
        {
            Some(section) => parse_recommendations(&section),
            None => {
                degradations.push(Degradation::RecommenderUnparsed);
                heuristic_recommendations(&findings)
            }
        },
        Err(reason) => {
            degradations.push(Degradation::RecommenderFailed { reason });
            heuristic_recommendations(&findings)
        }
    };
    let recommendations = rank_recommendations(&drafts);

    let per_file: BTreeMap<String, ScoreCard> = units
        .iter()
        .map(|u| (u.unit_path.clone(), u.scores.clone()))
        .collect();
    let weights: BTreeMap<String, usize> = units
        .iter()
        .map(|u| (u.unit_path.clone(), u.line_count))
        .collect();
    let scores = aggregate_file_scores(&per_file, &weights)?;

    let description = match units.as_slice() {
        [only] => only.summary.clone().unwrap_or_default(),
        many => many
            .iter()
            .filter_map(|u| {
                u.summary
                    .as_ref()
                    .map(|s| format!("{}: {}", u.unit_path, s))
            })
            .collect::<Vec<_>>()
            .join("\n\n"),
    };

    Ok(Synthesis {
        units,
        description,
        findings,
        per_file,
        scores,
        recommendations,
        degradations,
    })
}
