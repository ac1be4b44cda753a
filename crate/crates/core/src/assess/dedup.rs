use std::collections::BTreeSet;

use super::Finding;

/// Minimum description similarity for two findings to be duplicates.
pub const DUPLICATE_THRESHOLD: f64 = 0.8;

/// Lowercased runs of alphanumerics and underscores.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Jaccard similarity of the two token sets. Two empty sets score 1.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let a: BTreeSet<String> = normalize_tokens(a).into_iter().collect();
    let b: BTreeSet<String> = normalize_tokens(b).into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Same file, overlapping lines (or neither cites any), similar wording.
pub fn is_duplicate(a: &Finding, b: &Finding) -> bool {
    if a.unit_path != b.unit_path {
        return false;
    }
    let lines_overlap = if a.lines.is_empty() || b.lines.is_empty() {
        a.lines.is_empty() && b.lines.is_empty()
    } else {
        a.lines.iter().any(|l| b.lines.binary_search(l).is_ok())
    };
    lines_overlap && jaccard(&a.description, &b.description) >= DUPLICATE_THRESHOLD
}

struct Group {
    first_seen: usize,
    rep: Finding,
}

/// Absorb `other` into `into`: the more severe finding represents the pair
/// (ties keep `into`), and lint codes are unioned.
fn merge(into: &mut Group, other: Group) {
    let loser = if other.rep.severity > into.rep.severity {
        std::mem::replace(&mut into.rep, other.rep)
    } else {
        other.rep
    };
    for code in loser.lint_codes {
        if !into.rep.lint_codes.contains(&code) {
            into.rep.lint_codes.push(code);
        }
    }
    into.first_seen = into.first_seen.min(other.first_seen);
}

/// Collapse duplicate findings.
///
/// A greedy pass attaches each finding to the first group it duplicates;
/// groups are then merged pairwise until no two representatives are
/// duplicates, which makes the result a fixed point. Output follows the
/// first occurrence of each group.
pub fn deduplicate_findings(findings: &[Finding]) -> Vec<Finding> {
    let mut groups: Vec<Group> = Vec::new();
    for (idx, finding) in findings.iter().enumerate() {
        let incoming = Group {
            first_seen: idx,
            rep: finding.clone(),
        };
        match groups.iter_mut().find(|g| is_duplicate(&g.rep, finding)) {
            Some(group) => merge(group, incoming),
            None => groups.push(incoming),
        }
    }
    loop {
        let pair = (0..groups.len())
            .flat_map(|i| (i + 1..groups.len()).map(move |j| (i, j)))
            .find(|&(i, j)| is_duplicate(&groups[i].rep, &groups[j].rep));
        let Some((i, j)) = pair else { break };
        let other = groups.remove(j);
        merge(&mut groups[i], other);
    }
    groups.sort_by_key(|g| g.first_seen);
    groups.into_iter().map(|g| g.rep).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assess::{Dimension, Severity};

    fn f(path: &str, lines: Vec<usize>, text: &str, severity: Severity) -> Finding {
        Finding::new(Dimension::Correctness, severity, path, lines, text)
    }

    #[test]
    fn identical_findings_collapse() {
        let a = f("m.py", vec![3], "unused import os", Severity::Minor);
        assert_eq!(deduplicate_findings(&[a.clone(), a.clone()]), vec![a]);
    }

    #[test]
    fn hand_computed_pair_merges() {
        // {unused, variable, x, line, 4} vs {variable, x, is, unused, line, 4}: 5/6
        let a = "unused variable x (line 4)";
        let b = "variable x is unused, line 4";
        assert!((jaccard(a, b) - 5.0 / 6.0).abs() < 1e-12);
        let out = deduplicate_findings(&[
            f("m.py", vec![4], a, Severity::Minor).with_codes(["W0612"]),
            f("m.py", vec![4], b, Severity::Major).with_codes(["W0613"]),
        ]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].description, b);
        assert_eq!(out[0].lint_codes, vec!["W0613", "W0612"]);
    }

    #[test]
    fn different_files_both_kept() {
        let a = f("a.py", vec![1], "missing docstring", Severity::Minor);
        let b = f("b.py", vec![1], "missing docstring", Severity::Minor);
        assert_eq!(deduplicate_findings(&[a, b]).len(), 2);
    }

    #[test]
    fn disjoint_lines_kept() {
        let a = f("a.py", vec![1], "missing docstring", Severity::Minor);
        let b = f("a.py", vec![9], "missing docstring", Severity::Minor);
        let c = f("a.py", vec![], "missing docstring", Severity::Minor);
        assert_eq!(deduplicate_findings(&[a, b, c]).len(), 3);
    }
}
