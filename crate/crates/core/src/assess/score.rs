use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Dimension, DimensionScore, Finding, Severity};
use crate::lint::LintSummary;

/// The four dimension scores for one file or for the whole input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub correctness: DimensionScore,
    pub security: DimensionScore,
    pub style: DimensionScore,
    pub maintainability: DimensionScore,
}

impl ScoreCard {
    pub fn get(&self, dimension: Dimension) -> &DimensionScore {
        match dimension {
            Dimension::Correctness => &self.correctness,
            Dimension::Security => &self.security,
            Dimension::Style => &self.style,
            Dimension::Maintainability => &self.maintainability,
        }
    }

    /// Build from exactly one score per dimension, in any order.
    pub fn from_scores(scores: impl IntoIterator<Item = DimensionScore>) -> Option<Self> {
        let mut by_dim: BTreeMap<Dimension, DimensionScore> =
            scores.into_iter().map(|s| (s.dimension, s)).collect();
        Some(Self {
            correctness: by_dim.remove(&Dimension::Correctness)?,
            security: by_dim.remove(&Dimension::Security)?,
            style: by_dim.remove(&Dimension::Style)?,
            maintainability: by_dim.remove(&Dimension::Maintainability)?,
        })
    }

    /// Table order.
    pub fn iter(&self) -> impl Iterator<Item = &DimensionScore> {
        Dimension::ALL.into_iter().map(|d| self.get(d))
    }
}

/// What marks a correctness finding or lint message as security-relevant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityRules {
    /// Case-insensitive substrings of the finding description.
    pub keywords: Vec<String>,
    /// Exact lint codes.
    pub codes: Vec<String>,
    /// Lint code prefixes (for scanners that namespace their rules).
    pub code_prefixes: Vec<String>,
}

impl Default for SecurityRules {
    fn default() -> Self {
        let words = [
            "[security]",
            "injection",
            "secret",
            "password",
            "credential",
            "api key",
            "hard-coded",
            "hardcoded",
            "deserializ",
            "pickle",
            "eval(",
            "`eval`",
            "exec(",
            "`exec`",
            "shell=true",
            "os.system",
            "yaml.load",
            "path traversal",
            "insecure",
            "vulnerab",
            "unsafe",
        ];
        Self {
            keywords: words.iter().map(|s| s.to_string()).collect(),
            codes: ["W0122", "W0123", "W1509"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            code_prefixes: vec!["S".into()],
        }
    }
}

/// The keyword as written, widened to the word it is a stem of.
fn whole_word(text: &str, at: usize, keyword: &str) -> String {
    let bare = keyword.trim_matches(|c: char| c == '[' || c == ']' || c == '`' || c == '(');
    if !bare.chars().last().is_some_and(char::is_alphanumeric) || bare != keyword {
        return bare.to_string();
    }
    let end = text[at + keyword.len()..]
        .find(|c: char| !c.is_alphanumeric())
        .map_or(text.len(), |i| at + keyword.len() + i);
    text[at..end].to_string()
}

impl SecurityRules {
    fn code_matches(&self, code: &str) -> bool {
        self.codes.iter().any(|c| c == code)
            || self.code_prefixes.iter().any(|p| {
                code.starts_with(p.as_str()) && code[p.len()..].chars().all(|c| c.is_ascii_digit())
            })
    }

    /// The first rule the finding trips, if any.
    pub fn indicator(&self, finding: &Finding) -> Option<String> {
        let text = finding.description.to_ascii_lowercase();
        self.keywords
            .iter()
            .find_map(|k| {
                let k = k.to_ascii_lowercase();
                text.find(&k).map(|at| whole_word(&text, at, &k))
            })
            .or_else(|| {
                finding
                    .lint_codes
                    .iter()
                    .find(|c| self.code_matches(c))
                    .cloned()
            })
            .or_else(|| {
                (finding.dimension == Dimension::Security).then(|| "security tag".to_string())
            })
    }

    /// Move security-relevant findings into the security dimension.
    pub fn tag(&self, findings: &mut [Finding]) {
        for f in findings.iter_mut() {
            if f.dimension == Dimension::Correctness && self.indicator(f).is_some() {
                f.dimension = Dimension::Security;
            }
        }
    }
}

/// 10 minus 3/2/1 per critical/major/minor security indicator, floored at 0.
///
/// Indicators are findings the rules match plus lint messages with a
/// security code that no matched finding already cites (counted minor).
pub fn derive_security_score(
    findings: &[Finding],
    lint: Option<&LintSummary>,
    rules: &SecurityRules,
) -> DimensionScore {
    let mut hits: Vec<(Severity, String)> = Vec::new();
    let mut cited: Vec<&str> = Vec::new();
    for f in findings {
        if let Some(why) = rules.indicator(f) {
            hits.push((
                f.severity,
                format!("{} {} at {}", f.severity, why, f.location()),
            ));
            cited.extend(f.lint_codes.iter().map(String::as_str));
        }
    }
    if let Some(summary) = lint {
        for d in &summary.top {
            if rules.code_matches(&d.code) && !cited.contains(&d.code.as_str()) {
                hits.push((
                    Severity::Minor,
                    format!("minor {} ({}) at line {}", d.code, d.symbol, d.line),
                ));
                cited.push(&d.code);
            }
        }
    }
    if hits.is_empty() {
        return DimensionScore::new(Dimension::Security, 10.0, "no heuristic indicators");
    }
    let penalty: u32 = hits.iter().map(|(s, _)| s.penalty()).sum();
    let value = 10.0 - f64::from(penalty.min(10));
    let list: Vec<String> = hits.into_iter().map(|(_, why)| why).collect();
    DimensionScore::new(
        Dimension::Security,
        value,
        format!("heuristic indicators: {}", list.join("; ")),
    )
}

/// Fallback when an assessor gave no usable score: 10 minus severity
/// penalties of its findings in `dimension`.
pub fn findings_heuristic_score(
    dimension: Dimension,
    findings: &[Finding],
    reason: &str,
) -> DimensionScore {
    let penalty: u32 = findings
        .iter()
        .filter(|f| f.dimension == dimension)
        .map(|f| f.severity.penalty())
        .sum();
    DimensionScore::new(
        dimension,
        10.0 - f64::from(penalty.min(10)),
        format!(
            "{reason}; derived from {} findings",
            findings.iter().filter(|f| f.dimension == dimension).count()
        ),
    )
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("no file scores to aggregate")]
    Empty,
    #[error("no weight for `{0}`")]
    MissingWeight(String),
}

/// Weighted mean per dimension with line counts as weights.
///
/// Scores are whole tenths, so the mean is computed exactly on integers and
/// rounded half up to one decimal. Zero-weight files are ignored unless
/// every weight is zero, in which case the mean is unweighted. A single
/// file passes through unchanged.
pub fn aggregate_file_scores(
    per_file: &BTreeMap<String, ScoreCard>,
    weights: &BTreeMap<String, usize>,
) -> Result<ScoreCard, AggregateError> {
    if per_file.is_empty() {
        return Err(AggregateError::Empty);
    }
    let mut w = Vec::with_capacity(per_file.len());
    for path in per_file.keys() {
        w.push(
            *weights
                .get(path)
                .ok_or_else(|| AggregateError::MissingWeight(path.clone()))? as u128,
        );
    }
    if per_file.len() == 1 {
        return Ok(per_file.values().next().unwrap().clone());
    }
    if w.iter().all(|&x| x == 0) {
        w.iter_mut().for_each(|x| *x = 1);
    }
    let total: u128 = w.iter().sum();
    let scores = Dimension::ALL.map(|dim| {
        let tenths: Vec<i128> = per_file
            .values()
            .map(|card| card.get(dim).tenths() as i128)
            .collect();
        let sum: i128 = tenths.iter().zip(&w).map(|(t, &wi)| t * wi as i128).sum();
        let mean_tenths = (2 * sum + total as i128).div_euclid(2 * total as i128);
        let (mut best, mut worst) = (0, 0);
        for i in 1..tenths.len() {
            if tenths[i] > tenths[best] {
                best = i;
            }
            if tenths[i] < tenths[worst] {
                worst = i;
            }
        }
        let paths: Vec<&String> = per_file.keys().collect();
        DimensionScore::new(
            dim,
            mean_tenths as f64 / 10.0,
            format!(
                "line-weighted mean over {} files; best {} ({:.1}), worst {} ({:.1})",
                tenths.len(),
                paths[best],
                tenths[best] as f64 / 10.0,
                paths[worst],
                tenths[worst] as f64 / 10.0
            ),
        )
    });
    Ok(ScoreCard::from_scores(scores).expect("all four dimensions"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card(v: f64) -> ScoreCard {
        ScoreCard::from_scores(Dimension::ALL.map(|d| DimensionScore::new(d, v, "r"))).unwrap()
    }

    fn sec(severity: Severity, text: &str) -> Finding {
        Finding::new(Dimension::Correctness, severity, "m.py", vec![1], text)
    }

    #[test]
    fn security_clean() {
        let s = derive_security_score(&[], None, &SecurityRules::default());
        assert_eq!(s.value, 10.0);
        assert_eq!(s.rationale, "no heuristic indicators");
    }

    #[test]
    fn security_arithmetic_and_floor() {
        let rules = SecurityRules::default();
        let two = [
            sec(Severity::Critical, "SQL injection via format"),
            sec(Severity::Minor, "hardcoded password"),
        ];
        assert_eq!(derive_security_score(&two, None, &rules).value, 6.0);
        let five: Vec<_> = (0..5)
            .map(|_| sec(Severity::Critical, "command injection"))
            .collect();
        assert_eq!(derive_security_score(&five, None, &rules).value, 0.0);
    }

    #[test]
    fn tagging_moves_dimension() {
        let mut fs = [
            sec(Severity::Major, "uses pickle.load on untrusted input"),
            sec(Severity::Minor, "typo"),
        ];
        SecurityRules::default().tag(&mut fs);
        assert_eq!(fs[0].dimension, Dimension::Security);
        assert_eq!(fs[1].dimension, Dimension::Correctness);
    }

    #[test]
    fn aggregate_two_files() {
        let per_file = BTreeMap::from([
            ("a.py".to_string(), card(4.0)),
            ("b.py".to_string(), card(8.0)),
        ]);
        let weights = BTreeMap::from([("a.py".to_string(), 100), ("b.py".to_string(), 300)]);
        let agg = aggregate_file_scores(&per_file, &weights).unwrap();
        assert_eq!(agg.style.value, 7.0);
        assert!(agg
            .style
            .rationale
            .contains("best b.py (8.0), worst a.py (4.0)"));
    }

    #[test]
    fn aggregate_edges() {
        assert_eq!(
            aggregate_file_scores(&BTreeMap::new(), &BTreeMap::new()),
            Err(AggregateError::Empty)
        );
        let one = BTreeMap::from([("a.py".to_string(), card(6.3))]);
        let w = BTreeMap::from([("a.py".to_string(), 7)]);
        assert_eq!(aggregate_file_scores(&one, &w).unwrap(), card(6.3));
        let per_file = BTreeMap::from([
            ("a.py".to_string(), card(4.0)),
            ("b.py".to_string(), card(7.0)),
        ]);
        let zero = BTreeMap::from([("a.py".to_string(), 0), ("b.py".to_string(), 0)]);
        assert_eq!(
            aggregate_file_scores(&per_file, &zero)
                .unwrap()
                .correctness
                .value,
            5.5
        );
        let partial = BTreeMap::from([("a.py".to_string(), 0), ("b.py".to_string(), 3)]);
        assert_eq!(
            aggregate_file_scores(&per_file, &partial)
                .unwrap()
                .correctness
                .value,
            7.0
        );
    }

    #[test]
    fn indicator_names_the_trigger() {
        let rules = SecurityRules::default();
        let f = |dim, text: &str| Finding::new(dim, Severity::Major, "a.py", vec![1], text);
        assert_eq!(
            rules.indicator(&f(
                Dimension::Correctness,
                "unsafe Deserialization of input"
            )),
            Some("deserialization".into())
        );
        assert_eq!(
            rules.indicator(&f(Dimension::Correctness, "calls eval(x)")),
            Some("eval".into())
        );
        assert_eq!(
            rules.indicator(&f(Dimension::Security, "leaks data to logs")),
            Some("security tag".into())
        );
        assert_eq!(
            rules.indicator(&f(Dimension::Correctness, "off by one")),
            None
        );
    }
}
