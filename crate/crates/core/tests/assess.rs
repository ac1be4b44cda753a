use std::collections::BTreeMap;

use codeassay_core::assess::{
    aggregate_file_scores, deduplicate_findings, is_duplicate, parse_structured_output,
    rank_recommendations, Dimension, DimensionScore, DraftRecommendation, Finding, Impact, Role,
    ScoreCard, Severity,
};
use codeassay_core::runtime::AgentOutput;
use num_rational::Ratio;
use proptest::prelude::*;

fn severity() -> impl Strategy<Value = Severity> {
    prop::sample::select(vec![
        Severity::Critical,
        Severity::Major,
        Severity::Minor,
        Severity::Info,
    ])
}

fn impact() -> impl Strategy<Value = Impact> {
    prop::sample::select(vec![Impact::High, Impact::Medium, Impact::Low])
}

fn dimension() -> impl Strategy<Value = Dimension> {
    prop::sample::select(Dimension::ALL.to_vec())
}

/// Small vocabularies so that duplicates are common.
fn finding() -> impl Strategy<Value = Finding> {
    let words = prop::sample::subsequence(
        vec!["unused", "variable", "x", "line", "is", "import", "os"],
        3..=7,
    );
    (
        dimension(),
        severity(),
        prop::sample::select(vec!["a.py", "b.py"]),
        prop::collection::vec(1usize..6, 0..3),
        words,
        prop::collection::vec(prop::sample::select(vec!["W0612", "W0611", "C0103"]), 0..3),
    )
        .prop_map(|(d, s, path, lines, words, codes)| {
            Finding::new(d, s, path, lines, words.join(" ")).with_codes(codes)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dedup_is_idempotent_and_conservative(input in prop::collection::vec(finding(), 0..14)) {
        let once = deduplicate_findings(&input);
        prop_assert_eq!(deduplicate_findings(&once), once.clone());
        for out in &once {
            let origin = input.iter().find(|f| {
                f.description == out.description
                    && f.unit_path == out.unit_path
                    && f.lines == out.lines
                    && f.severity == out.severity
                    && f.dimension == out.dimension
            });
            prop_assert!(origin.is_some(), "{:?} not from input", out);
            for code in &out.lint_codes {
                prop_assert!(input.iter().any(|f| f.lint_codes.contains(code)));
            }
            prop_assert!(origin.unwrap().lint_codes.iter().all(|c| out.lint_codes.contains(c)));
        }
        for (i, a) in once.iter().enumerate() {
            for b in &once[i + 1..] {
                prop_assert!(!is_duplicate(a, b));
            }
        }
        prop_assert!(once.len() <= input.len());
    }
}

/// Selection-sort oracle: repeatedly take the best remaining draft,
/// earliest first among equals.
fn oracle_rank(drafts: &[DraftRecommendation]) -> Vec<String> {
    let key = |d: &DraftRecommendation| (d.severity, d.impact, std::cmp::Reverse(d.dimension));
    let mut remaining: Vec<usize> = (0..drafts.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() && out.len() < 10 {
        let mut best = 0;
        for pos in 1..remaining.len() {
            if key(&drafts[remaining[pos]]) > key(&drafts[remaining[best]]) {
                best = pos;
            }
        }
        out.push(drafts[remaining.remove(best)].action.clone());
    }
    out
}

proptest! {
    #[test]
    fn ranking_matches_selection_oracle(
        drafts in prop::collection::vec((severity(), impact(), dimension()), 0..25)
    ) {
        let drafts: Vec<DraftRecommendation> = drafts
            .into_iter()
            .enumerate()
            .map(|(i, (severity, impact, dimension))| DraftRecommendation {
                severity,
                impact,
                dimension,
                action: format!("action {i}"),
                related_findings: vec![],
            })
            .collect();
        let ranked = rank_recommendations(&drafts);
        prop_assert!(ranked.len() <= 10);
        prop_assert_eq!(ranked.iter().map(|r| r.rank).collect::<Vec<_>>(), (1..=ranked.len()).collect::<Vec<_>>());
        prop_assert_eq!(ranked.iter().map(|r| r.action.clone()).collect::<Vec<_>>(), oracle_rank(&drafts));
    }
}

fn card(tenths: [i64; 4]) -> ScoreCard {
    ScoreCard::from_scores(
        Dimension::ALL
            .iter()
            .zip(tenths)
            .map(|(d, t)| DimensionScore::new(*d, t as f64 / 10.0, "r")),
    )
    .unwrap()
}

/// Exact rational weighted mean, rounded half up to one decimal.
fn oracle_mean(values: &[(i64, usize)]) -> f64 {
    let mut weights: Vec<i64> = values.iter().map(|(_, w)| *w as i64).collect();
    if weights.iter().all(|&w| w == 0) {
        weights.iter_mut().for_each(|w| *w = 1);
    }
    let total: i64 = weights.iter().sum();
    let mean = values
        .iter()
        .zip(&weights)
        .map(|((t, _), w)| Ratio::new(*t * w, 10))
        .sum::<Ratio<i64>>()
        / Ratio::from_integer(total);
    let rounded = (mean * Ratio::from_integer(10) + Ratio::new(1, 2)).floor();
    *rounded.numer() as f64 / *rounded.denom() as f64 / 10.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn aggregation_matches_rational_oracle(
        files in prop::collection::vec((prop::array::uniform4(0i64..=100), 0usize..2000), 2..8)
    ) {
        let per_file: BTreeMap<String, ScoreCard> =
            files.iter().enumerate().map(|(i, (t, _))| (format!("f{i:02}.py"), card(*t))).collect();
        let weights: BTreeMap<String, usize> =
            files.iter().enumerate().map(|(i, (_, w))| (format!("f{i:02}.py"), *w)).collect();
        let agg = aggregate_file_scores(&per_file, &weights).unwrap();
        for (k, dim) in Dimension::ALL.iter().enumerate() {
            let column: Vec<(i64, usize)> = files.iter().map(|(t, w)| (t[k], *w)).collect();
            let want = oracle_mean(&column);
            prop_assert!((agg.get(*dim).value - want).abs() < 1e-9, "{dim}: {} vs {want}", agg.get(*dim).value);
            let lo = column.iter().map(|c| c.0).min().unwrap() as f64 / 10.0;
            let hi = column.iter().map(|c| c.0).max().unwrap() as f64 / 10.0;
            prop_assert!(lo <= agg.get(*dim).value && agg.get(*dim).value <= hi);
        }
    }

    #[test]
    fn scores_always_clamp(
        head in "[ a-zA-Z:/]{0,8}",
        number in prop_oneof![
            Just("N/A".to_string()),
            Just("\u{2212}3".to_string()),
            Just("99".to_string()),
            Just("-0.5".to_string()),
            Just("100000000000000000000000000".to_string()),
            (-1000.0f64..1000.0).prop_map(|v| format!("{v:.2}")),
            "[0-9]{1,40}",
        ],
        tail in prop::sample::select(vec!["", "/10", " out of 10", " / 10", "%", " points"]),
        role in prop::sample::select(vec![Role::Correctness, Role::Style]),
    ) {
        let text = format!("## Findings\n(none)\n## Score\n{head}{number}{tail}\nMaintainability: {number}");
        let contract: Vec<String> = role.contract().iter().map(|s| s.to_string()).collect();
        let out = AgentOutput::from_text(role.agent_name(), text, &contract);
        let parsed = parse_structured_output(&out, role, "m.py");
        for s in &parsed.scores {
            prop_assert!((0.0..=10.0).contains(&s.value), "{:?}", s);
        }
    }
}

#[test]
fn fixture_pair_merges_into_one() {
    let a = Finding::new(
        Dimension::Correctness,
        Severity::Minor,
        "m.py",
        vec![4],
        "unused variable x (line 4)",
    );
    let b = Finding::new(
        Dimension::Style,
        Severity::Minor,
        "m.py",
        vec![4],
        "variable x is unused, line 4",
    );
    let out = deduplicate_findings(&[a.clone(), b]);
    assert_eq!(out, vec![a]);
}
