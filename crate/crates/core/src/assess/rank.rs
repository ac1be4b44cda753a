use std::cmp::Reverse;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Dimension, Finding, Impact, Severity};

pub const MAX_RECOMMENDATIONS: usize = 10;

static BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*+\x{2022}]|\d{1,3}[.)])\s+(.*)$").unwrap());
static LEADING_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\[([^\]]*)\]\s*").unwrap());
static FINDING_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bF(\d{1,3})\b").unwrap());

/// A recommendation before ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftRecommendation {
    pub severity: Severity,
    pub impact: Impact,
    pub dimension: Dimension,
    pub action: String,
    /// `F<n>` references into the finding list the recommender was shown.
    pub related_findings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    /// 1-based and contiguous.
    pub rank: usize,
    pub severity: Severity,
    pub impact: Impact,
    pub dimension: Dimension,
    pub action: String,
    pub related_findings: Vec<String>,
}

/// Stable sort by severity, then impact, then dimension priority; cap at
/// ten and number from 1.
pub fn rank_recommendations(drafts: &[DraftRecommendation]) -> Vec<Recommendation> {
    let mut sorted: Vec<&DraftRecommendation> = drafts.iter().collect();
    sorted.sort_by_key(|d| (Reverse(d.severity), Reverse(d.impact), d.dimension));
    sorted
        .into_iter()
        .take(MAX_RECOMMENDATIONS)
        .enumerate()
        .map(|(i, d)| Recommendation {
            rank: i + 1,
            severity: d.severity,
            impact: d.impact,
            dimension: d.dimension,
            action: d.action.clone(),
            related_findings: d.related_findings.clone(),
        })
        .collect()
}

/// Items of a `## Recommendations` body.
///
/// Leading bracket tags such as `[critical] [high impact] [security]` set
/// severity, impact and dimension; defaults are minor, medium and
/// maintainability. The rest of the item is the action, kept verbatim.
pub fn parse_recommendations(section: &str) -> Vec<DraftRecommendation> {
    let mut items: Vec<String> = Vec::new();
    for line in section.lines() {
        if let Some(caps) = BULLET.captures(line) {
            items.push(caps[1].trim().to_string());
        } else if line.starts_with([' ', '\t']) && !line.trim().is_empty() {
            if let Some(last) = items.last_mut() {
                last.push(' ');
                last.push_str(line.trim());
            }
        }
    }
    items
        .iter()
        .filter_map(|item| draft_from_item(item))
        .collect()
}

fn draft_from_item(item: &str) -> Option<DraftRecommendation> {
    let mut severity = None;
    let mut impact = None;
    let mut dimension = None;
    let mut rest = item;
    while let Some(caps) = LEADING_TAG.captures(rest) {
        for word in caps[1].split(|c: char| c == ',' || c == '/' || c == ';' || c.is_whitespace()) {
            let word = word.trim_end_matches(':');
            severity = severity.or_else(|| Severity::parse(word));
            impact = impact.or_else(|| Impact::parse(word));
            dimension = dimension.or_else(|| Dimension::parse(word).filter(|_| word.len() >= 5));
        }
        rest = &rest[caps.get(0).unwrap().end()..];
    }
    let action = rest.trim();
    if action.is_empty() || action.eq_ignore_ascii_case("none") {
        return None;
    }
    let mut related: Vec<String> = FINDING_REF
        .captures_iter(action)
        .map(|c| format!("F{}", &c[1]))
        .collect();
    related.dedup();
    Some(DraftRecommendation {
        severity: severity.unwrap_or(Severity::Minor),
        impact: impact.unwrap_or(Impact::Medium),
        dimension: dimension.unwrap_or(Dimension::Maintainability),
        action: action.to_string(),
        related_findings: related,
    })
}

fn impact_for(severity: Severity) -> Impact {
    match severity {
        Severity::Critical | Severity::Major => Impact::High,
        Severity::Minor => Impact::Medium,
        Severity::Info => Impact::Low,
    }
}

/// Fallback drafts built straight from findings, one per finding.
pub fn heuristic_recommendations(findings: &[Finding]) -> Vec<DraftRecommendation> {
    findings
        .iter()
        .enumerate()
        .map(|(i, f)| DraftRecommendation {
            severity: f.severity,
            impact: impact_for(f.severity),
            dimension: f.dimension,
            action: format!(
                "Fix the {} issue at {}: {}",
                f.dimension,
                f.location(),
                f.description
            ),
            related_findings: vec![format!("F{}", i + 1)],
        })
        .collect()
}
