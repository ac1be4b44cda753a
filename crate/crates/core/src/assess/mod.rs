//! The assessment agents: prompts, structured-output parsing, scoring,
//! finding de-duplication, recommendation ranking and synthesis.

mod dedup;
mod parse;
mod prompt;
mod rank;
mod score;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dedup::{
    deduplicate_findings, is_duplicate, jaccard, normalize_tokens, DUPLICATE_THRESHOLD,
};
pub use parse::{parse_score_value, parse_structured_output, ParsedOutput, ScoreParse};
pub use prompt::{
    build_prompt, AssessmentContext, AssessmentPrompter, ContextError, PromptSettings,
};
pub use rank::{
    heuristic_recommendations, parse_recommendations, rank_recommendations, DraftRecommendation,
    Recommendation, MAX_RECOMMENDATIONS,
};
pub use score::{
    aggregate_file_scores, derive_security_score, findings_heuristic_score, AggregateError,
    ScoreCard, SecurityRules,
};
pub use synth::{assess_unit, synthesize, ChunkRun, Degradation, Synthesis, UnitAssessment};

pub const REPORT_GENERATOR: &str = "report_generator";
pub const CORRECTNESS_ASSESSOR: &str = "correctness_assessor";
pub const STYLE_ASSESSOR: &str = "style_assessor";
pub const DESCRIPTION_GENERATOR: &str = "description_generator";
pub const IMPROVEMENT_RECOMMENDER: &str = "improvement_recommender";

pub const FINDINGS_HEADER: &str = "## Findings";
pub const SCORE_HEADER: &str = "## Score";
pub const SUMMARY_HEADER: &str = "## Summary";
pub const RECOMMENDATIONS_HEADER: &str = "## Recommendations";
pub const CONCLUSION_HEADER: &str = "## Conclusion";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Orchestrator,
    Correctness,
    Style,
    Description,
    Recommender,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Orchestrator,
        Role::Correctness,
        Role::Style,
        Role::Description,
        Role::Recommender,
    ];

    pub fn agent_name(self) -> &'static str {
        match self {
            Role::Orchestrator => REPORT_GENERATOR,
            Role::Correctness => CORRECTNESS_ASSESSOR,
            Role::Style => STYLE_ASSESSOR,
            Role::Description => DESCRIPTION_GENERATOR,
            Role::Recommender => IMPROVEMENT_RECOMMENDER,
        }
    }

    pub fn from_agent_name(name: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.agent_name() == name)
    }

    /// Section headers the agent is told to emit.
    pub fn contract(self) -> &'static [&'static str] {
        match self {
            Role::Orchestrator => &[CONCLUSION_HEADER],
            Role::Correctness | Role::Style => &[FINDINGS_HEADER, SCORE_HEADER],
            Role::Description => &[SUMMARY_HEADER],
            Role::Recommender => &[RECOMMENDATIONS_HEADER],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Correctness,
    Security,
    Style,
    Maintainability,
}

impl Dimension {
    /// Table order, which is also the tie-break priority when ranking.
    pub const ALL: [Dimension; 4] = [
        Dimension::Correctness,
        Dimension::Security,
        Dimension::Style,
        Dimension::Maintainability,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Dimension::Correctness => "Correctness",
            Dimension::Security => "Security",
            Dimension::Style => "Style",
            Dimension::Maintainability => "Maintainability",
        }
    }

    pub fn parse(word: &str) -> Option<Self> {
        let w = word.trim().to_ascii_lowercase();
        Dimension::ALL
            .into_iter()
            .find(|d| w.starts_with(&d.label().to_ascii_lowercase()[..5]))
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label().to_ascii_lowercase())
    }
}

/// Declared from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Minor,
    Major,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 4] = [
        Severity::Critical,
        Severity::Major,
        Severity::Minor,
        Severity::Info,
    ];

    pub fn parse(word: &str) -> Option<Self> {
        Some(match word.trim().to_ascii_lowercase().as_str() {
            "critical" | "blocker" => Severity::Critical,
            "major" => Severity::Major,
            "minor" => Severity::Minor,
            "info" | "informational" => Severity::Info,
            _ => return None,
        })
    }

    /// Points removed by the findings heuristics.
    pub fn penalty(self) -> u32 {
        match self {
            Severity::Critical => 3,
            Severity::Major => 2,
            Severity::Minor => 1,
            Severity::Info => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Critical => "critical",
            Severity::Major => "major",
            Severity::Minor => "minor",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declared from least to most impactful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impact {
    Low,
    Medium,
    High,
}

impl Impact {
    pub fn parse(word: &str) -> Option<Self> {
        Some(match word.trim().to_ascii_lowercase().as_str() {
            "high" => Impact::High,
            "medium" | "moderate" => Impact::Medium,
            "low" => Impact::Low,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Impact::High => "high",
            Impact::Medium => "medium",
            Impact::Low => "low",
        }
    }
}

impl fmt::Display for Impact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evidence-backed issue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub dimension: Dimension,
    pub severity: Severity,
    pub unit_path: String,
    /// Sorted ascending, no repeats.
    pub lines: Vec<usize>,
    pub lint_codes: Vec<String>,
    pub description: String,
}

impl Finding {
    pub fn new(
        dimension: Dimension,
        severity: Severity,
        unit_path: impl Into<String>,
        mut lines: Vec<usize>,
        description: impl Into<String>,
    ) -> Self {
        lines.sort_unstable();
        lines.dedup();
        Self {
            dimension,
            severity,
            unit_path: unit_path.into(),
            lines,
            lint_codes: Vec::new(),
            description: description.into(),
        }
    }

    pub fn with_codes<I, S>(mut self, codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for code in codes {
            let code = code.into();
            if !self.lint_codes.contains(&code) {
                self.lint_codes.push(code);
            }
        }
        self
    }

    /// `path:12-14` style location.
    pub fn location(&self) -> String {
        match (self.lines.first(), self.lines.last()) {
            (Some(a), Some(b)) if a == b => format!("{}:{a}", self.unit_path),
            (Some(a), Some(b)) => format!("{}:{a}-{b}", self.unit_path),
            _ => self.unit_path.clone(),
        }
    }
}

/// A 0 to 10 rating, kept at one decimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionScore {
    pub dimension: Dimension,
    pub value: f64,
    pub rationale: String,
}

impl DimensionScore {
    /// Clamps into [0, 10] and rounds to one decimal. NaN becomes 0.
    pub fn new(dimension: Dimension, value: f64, rationale: impl Into<String>) -> Self {
        let value = if value.is_nan() {
            0.0
        } else {
            value.clamp(0.0, 10.0)
        };
        Self {
            dimension,
            value: (value * 10.0).round() / 10.0,
            rationale: rationale.into(),
        }
    }

    pub fn tenths(&self) -> i64 {
        (self.value * 10.0).round() as i64
    }
}
