use std::sync::LazyLock;

use regex::Regex;

use super::{
    Dimension, DimensionScore, Finding, Role, Severity, FINDINGS_HEADER, SCORE_HEADER,
    SUMMARY_HEADER,
};
use crate::runtime::{extract_section, AgentOutput};

static LINE_REF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\blines?\s*:?\s*(\d+)(?:\s*(?:-|\x{2013}|\x{2014}|to)\s*(\d+))?").unwrap()
});
static LINT_CODE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[A-Z]{1,3}\d{3,4}\b").unwrap());
static SEVERITY_TAG: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:\*\*)?\[?(critical|blocker|major|minor|info|informational)\b\]?(?:\*\*)?\s*[:\-\x{2013}]?\s*")
        .unwrap()
});
static SEVERITY_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(critical|major|minor)\b").unwrap());
static LEADING_LOCATOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^lines?\s*\d+(?:\s*(?:-|\x{2013}|\x{2014}|to)\s*\d+)?\s*[:\-\x{2013}\x{2014}]\s*",
    )
    .unwrap()
});
static TRAILING_CODES: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\s*\(\s*[A-Z]{1,3}\d{3,4}(?:\s*,\s*[A-Z]{1,3}\d{3,4})*\s*\)\s*$").unwrap()
});
static BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*+\x{2022}]|\d{1,3}[.)])\s+(.*)$").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"([-\x{2212}]?\d+(?:\.\d+)?)(\s*(?:/\s*10(?:\.0+)?|out\s+of\s+10)\b)?").unwrap()
});
static LABELED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(correctness|style|maintainability)\b[^0-9\n\x{2212}-]{0,20}([-\x{2212}]?\d+(?:\.\d+)?)")
        .unwrap()
});
static DIMENSION_TAG: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*\[(security|maintainability|style|correctness)\]\s*").unwrap()
});

/// Structured view of one agent's reply.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedOutput {
    pub findings: Vec<Finding>,
    /// Primary dimension first; the style assessor adds maintainability.
    pub scores: Vec<DimensionScore>,
    /// Body of `## Summary` for the description role.
    pub summary: Option<String>,
    /// Everything outside the contract sections.
    pub free_text: String,
    /// A contract header was missing.
    pub parse_warning: bool,
}

impl ParsedOutput {
    pub fn score(&self, dimension: Dimension) -> Option<&DimensionScore> {
        self.scores.iter().find(|s| s.dimension == dimension)
    }
}

/// Outcome of reading a single score token.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreParse {
    pub value: f64,
    /// The value as written, before clamping.
    pub raw: f64,
}

impl ScoreParse {
    pub fn clamped(&self) -> bool {
        self.value != self.raw
    }
}

/// First numeric token in `text`, accepting `N`, `N/10` and `N out of 10`.
/// A unicode minus counts as a sign.
pub fn parse_score_value(text: &str) -> Option<ScoreParse> {
    let caps = NUMBER.captures(text)?;
    score_from_token(&caps[1])
}

fn score_from_token(token: &str) -> Option<ScoreParse> {
    let raw: f64 = token.replace('\u{2212}', "-").parse().ok()?;
    if !raw.is_finite() {
        return None;
    }
    Some(ScoreParse {
        value: raw.clamp(0.0, 10.0),
        raw,
    })
}

fn to_score(dimension: Dimension, parsed: &ScoreParse, note: &str) -> DimensionScore {
    let mut rationale = if note.is_empty() {
        "model-assessed".to_string()
    } else {
        note.to_string()
    };
    if parsed.clamped() {
        rationale = format!("{rationale} (clamped from {})", parsed.raw);
    }
    DimensionScore::new(dimension, parsed.value, rationale)
}

/// First line of the score section that is not just the number.
fn score_note(section: &str) -> String {
    section
        .lines()
        .map(str::trim)
        .map(|l| l.trim_start_matches(['-', '*', ' ']))
        .find(|l| {
            !l.is_empty() && NUMBER.replace_all(l, "").trim().len() > 3 && !LABELED.is_match(l)
        })
        .unwrap_or("")
        .chars()
        .take(160)
        .collect()
}

fn parse_scores(role: Role, section: &str) -> Vec<DimensionScore> {
    let note = score_note(section);
    let mut labeled = std::collections::BTreeMap::new();
    for caps in LABELED.captures_iter(section) {
        if let (Some(dim), Some(parsed)) = (Dimension::parse(&caps[1]), score_from_token(&caps[2]))
        {
            labeled.entry(dim).or_insert(parsed);
        }
    }
    let unlabeled: Vec<ScoreParse> = NUMBER
        .captures_iter(section)
        .filter_map(|c| score_from_token(&c[1]))
        .collect();
    match role {
        Role::Correctness => labeled
            .get(&Dimension::Correctness)
            .or(unlabeled.first())
            .map(|p| vec![to_score(Dimension::Correctness, p, &note)])
            .unwrap_or_default(),
        Role::Style => {
            let mut out = Vec::new();
            let style = labeled.get(&Dimension::Style).or(unlabeled.first());
            if let Some(p) = style {
                out.push(to_score(Dimension::Style, p, &note));
            }
            let maint = labeled
                .get(&Dimension::Maintainability)
                .or(if labeled.is_empty() {
                    unlabeled.get(1)
                } else {
                    None
                });
            if let Some(p) = maint {
                out.push(to_score(Dimension::Maintainability, p, &note));
            }
            out
        }
        _ => Vec::new(),
    }
}

fn is_none_marker(text: &str) -> bool {
    let t = text
        .trim()
        .trim_matches(|c: char| c == '(' || c == ')' || c == '.' || c == '_' || c == '*')
        .to_ascii_lowercase();
    matches!(
        t.as_str(),
        "" | "none"
            | "n/a"
            | "no findings"
            | "no issues"
            | "no issues found"
            | "no findings."
            | "nothing to report"
    )
}

fn base_dimension(role: Role) -> Dimension {
    match role {
        Role::Style => Dimension::Style,
        _ => Dimension::Correctness,
    }
}

/// Best-effort finding from one bullet's text.
fn finding_from_item(role: Role, unit_path: &str, item: &str) -> Option<Finding> {
    let item = item.trim();
    if is_none_marker(item) {
        return None;
    }
    let mut dimension = base_dimension(role);
    let mut text = item.to_string();
    let mut severity = None;
    for _ in 0..3 {
        if let Some(caps) = SEVERITY_TAG.captures(&text) {
            severity = Severity::parse(&caps[1]);
            text = text[caps.get(0).unwrap().end()..].to_string();
        } else if let Some(caps) = DIMENSION_TAG.captures(&text) {
            if let Some(d) = Dimension::parse(&caps[1]) {
                dimension = d;
            }
            text = text[caps.get(0).unwrap().end()..].to_string();
        } else {
            break;
        }
    }
    let severity = severity
        .or_else(|| {
            SEVERITY_WORD
                .captures(&text)
                .and_then(|c| Severity::parse(&c[1]))
        })
        .unwrap_or(Severity::Minor);
    let description = text.trim().to_string();
    if description.is_empty() {
        return None;
    }
    let mut lines = Vec::new();
    for caps in LINE_REF.captures_iter(&description) {
        let Ok(start) = caps[1].parse::<usize>() else {
            continue;
        };
        let end = caps
            .get(2)
            .and_then(|m| m.as_str().parse::<usize>().ok())
            .filter(|&e| e >= start && e - start <= 500)
            .unwrap_or(start);
        lines.extend((start..=end).filter(|&l| l > 0));
    }
    let codes: Vec<&str> = LINT_CODE
        .find_iter(&description)
        .map(|m| m.as_str())
        .collect();
    let shown = display_description(&description);
    Some(Finding::new(dimension, severity, unit_path, lines, shown).with_codes(codes))
}

/// Drop a leading `line N:` locator and a trailing all-codes parenthetical;
/// both are carried as structured fields.
fn display_description(description: &str) -> String {
    let mut text = description;
    if let Some(m) = LEADING_LOCATOR.find(text) {
        text = &text[m.end()..];
    }
    if let Some(m) = TRAILING_CODES.find(text) {
        text = &text[..m.start()];
    }
    let text = text.trim();
    if text.is_empty() {
        description.to_string()
    } else {
        text.to_string()
    }
}

fn parse_findings(role: Role, unit_path: &str, section: &str) -> (Vec<Finding>, Vec<String>) {
    let mut items: Vec<String> = Vec::new();
    let mut stray = Vec::new();
    for line in section.lines() {
        if let Some(caps) = BULLET.captures(line) {
            items.push(caps[1].to_string());
        } else if line.trim().is_empty() {
            continue;
        } else if line.starts_with([' ', '\t']) && !items.is_empty() {
            let last = items.last_mut().unwrap();
            last.push(' ');
            last.push_str(line.trim());
        } else if !is_none_marker(line) {
            stray.push(line.trim().to_string());
        }
    }
    let findings = items
        .iter()
        .filter_map(|item| finding_from_item(role, unit_path, item))
        .collect();
    (findings, stray)
}

/// Remove the named sections (header line plus body) from `text`.
fn strip_sections(text: &str, headers: &[&str]) -> String {
    let mut out = Vec::new();
    let mut skipping = false;
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with("# ") || t.starts_with("## ") {
            skipping = headers.iter().any(|h| t.eq_ignore_ascii_case(h));
            if skipping {
                continue;
            }
        }
        if !skipping {
            out.push(line);
        }
    }
    out.join("\n").trim().to_string()
}

/// Read findings, scores and summary out of an agent reply.
///
/// With none of the role's headers present the whole text is kept as free
/// text and `parse_warning` is set; a partial set parses what is there.
pub fn parse_structured_output(out: &AgentOutput, role: Role, unit_path: &str) -> ParsedOutput {
    let contract = role.contract();
    let sections: Vec<Option<String>> = contract
        .iter()
        .map(|h| {
            out.section(h)
                .map(str::to_string)
                .or_else(|| extract_section(&out.raw_text, h))
        })
        .collect();
    let mut parsed = ParsedOutput {
        parse_warning: sections.iter().any(Option::is_none),
        ..ParsedOutput::default()
    };
    if sections.iter().all(Option::is_none) {
        parsed.free_text = out.raw_text.trim().to_string();
        return parsed;
    }
    let mut free = vec![strip_sections(&out.raw_text, contract)];
    for (header, body) in contract.iter().zip(&sections) {
        let Some(body) = body else { continue };
        match *header {
            FINDINGS_HEADER => {
                let (findings, stray) = parse_findings(role, unit_path, body);
                parsed.findings = findings;
                free.extend(stray);
            }
            SCORE_HEADER => parsed.scores = parse_scores(role, body),
            SUMMARY_HEADER => parsed.summary = Some(body.clone()),
            _ => {}
        }
    }
    parsed.free_text = free
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    parsed
}
