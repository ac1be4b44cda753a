mod common;

use codeassay_core::lint::{
    parse_diagnostics, run_linter, summarize_diagnostics, LintCategory, LintDiagnostic, LintError,
    LintResult, LinterConfig,
};
use common::stub_linter::{fixture, StubLinter};
use proptest::prelude::*;

const SAMPLE_CODE: &str = "x = 1\n";

/// (line, column, code, symbol, category, message), transcribed from the
/// captured pylint output for `sample.py`.
const SAMPLE_EXPECTED: [(usize, usize, &str, &str, LintCategory, &str); 7] = [
    (
        1,
        0,
        "C0114",
        "missing-module-docstring",
        LintCategory::Convention,
        "Missing module docstring",
    ),
    (
        5,
        0,
        "C0116",
        "missing-function-docstring",
        LintCategory::Convention,
        "Missing function or method docstring",
    ),
    (
        5,
        0,
        "C0103",
        "invalid-name",
        LintCategory::Convention,
        "Function name \"LoadData\" doesn't conform to snake_case naming style",
    ),
    (
        10,
        0,
        "C0116",
        "missing-function-docstring",
        LintCategory::Convention,
        "Missing function or method docstring",
    ),
    (
        11,
        13,
        "W0123",
        "eval-used",
        LintCategory::Warning,
        "Use of eval",
    ),
    (
        12,
        4,
        "W0612",
        "unused-variable",
        LintCategory::Warning,
        "Unused variable 'unused'",
    ),
    (
        1,
        0,
        "W0611",
        "unused-import",
        LintCategory::Warning,
        "Unused import os",
    ),
];

fn assert_sample(ds: &[LintDiagnostic]) {
    assert_eq!(ds.len(), SAMPLE_EXPECTED.len());
    for (d, (line, column, code, symbol, category, message)) in ds.iter().zip(SAMPLE_EXPECTED) {
        assert_eq!(d.path, "sample.py");
        assert_eq!((d.line, d.column), (line, column));
        assert_eq!((d.code.as_str(), d.symbol.as_str()), (code, symbol));
        assert_eq!(d.category, category);
        assert_eq!(d.message, message);
    }
}

#[test]
fn replayed_capture_matches_frozen_fields() {
    let stub = StubLinter::new(&fixture("pylint_sample.json"), 20);
    let result = run_linter(SAMPLE_CODE, &stub.config()).unwrap();
    assert!(result.linter_available());
    assert_sample(result.diagnostics());
}

#[test]
fn captured_error_record() {
    let stub = StubLinter::new(&fixture("pylint_error.json"), 2);
    let result = run_linter(SAMPLE_CODE, &stub.config()).unwrap();
    let ds = result.diagnostics();
    assert_eq!(ds.len(), 1);
    assert_eq!((ds[0].line, ds[0].category), (3, LintCategory::Error));
    assert_eq!(ds[0].code, "E0602");
}

#[test]
fn empty_array_output() {
    let stub = StubLinter::new("[]", 0);
    assert_eq!(
        run_linter(SAMPLE_CODE, &stub.config()).unwrap(),
        LintResult::Diagnostics(vec![])
    );
}

#[test]
fn non_json_lands_in_raw_fallback() {
    let text = "************* Module x\nx.py:1:0: C0114: Missing module docstring\n";
    let stub = StubLinter::new(text, 16);
    let result = run_linter(SAMPLE_CODE, &stub.config()).unwrap();
    assert_eq!(result.raw_fallback(), Some(text));
    assert!(result.diagnostics().is_empty());
}

#[test]
fn findings_statuses_are_success() {
    let payload = fixture("pylint_sample.json");
    for status in 0..=31 {
        let stub = StubLinter::new(&payload, status);
        let result = run_linter(SAMPLE_CODE, &stub.config())
            .unwrap_or_else(|e| panic!("status {status}: {e}"));
        assert_eq!(result.diagnostics().len(), 7, "status {status}");
    }
}

#[test]
fn usage_error_status_fails() {
    let stub = StubLinter::new("usage: linter [options]", 32);
    let err = run_linter(SAMPLE_CODE, &stub.config()).unwrap_err();
    assert!(matches!(
        err,
        LintError::Failed {
            status: Some(32),
            ..
        }
    ));
}

#[test]
fn temp_files_removed_on_every_path() {
    let cases = [
        StubLinter::new("[]", 0),
        StubLinter::new("garbage", 1),
        StubLinter::new("", 64),
        StubLinter::with_body("", "sleep 5"),
    ];
    for (i, stub) in cases.iter().enumerate() {
        let mut cfg = stub.config();
        cfg.timeout_secs = 0.5;
        let _ = run_linter("print('hi')\n", &cfg);
        let seen = stub.seen_paths();
        assert_eq!(seen.len(), 1, "case {i}");
        assert!(seen[0].extension().is_some_and(|e| e == "py"));
        assert!(
            !seen[0].exists(),
            "case {i}: {} left behind",
            seen[0].display()
        );
    }
}

#[test]
fn timeout_is_transient() {
    use codeassay_core::runtime::Transient;
    let stub = StubLinter::with_body("", "sleep 5");
    let cfg = LinterConfig {
        timeout_secs: 0.2,
        ..stub.config()
    };
    let started = std::time::Instant::now();
    let err = run_linter(SAMPLE_CODE, &cfg).unwrap_err();
    assert!(matches!(err, LintError::Timeout(_)));
    assert!(err.is_transient());
    assert!(started.elapsed().as_secs_f64() < 3.0);
}

#[test]
fn parse_keeps_input_order() {
    assert_sample(&parse_diagnostics(&fixture("pylint_sample.json")).unwrap());
}

fn category() -> impl Strategy<Value = LintCategory> {
    prop::sample::select(LintCategory::ALL.to_vec())
}

/// Bucket oracle: walk categories from most to least severe, taking each
/// bucket in input order.
fn oracle_top(ds: &[LintDiagnostic], n: usize) -> Vec<LintDiagnostic> {
    let order = [
        LintCategory::Fatal,
        LintCategory::Error,
        LintCategory::Warning,
        LintCategory::Refactor,
        LintCategory::Convention,
    ];
    order
        .iter()
        .flat_map(|c| ds.iter().filter(move |d| d.category == *c))
        .take(n)
        .cloned()
        .collect()
}

proptest! {
    #[test]
    fn top_n_matches_bucket_oracle(cats in prop::collection::vec(category(), 40), n in 0usize..45) {
        let ds: Vec<LintDiagnostic> = cats
            .iter()
            .enumerate()
            .map(|(i, c)| LintDiagnostic {
                path: "m.py".into(),
                line: i + 1,
                column: 0,
                code: format!("X{i:04}"),
                symbol: "s".into(),
                category: *c,
                message: "m".into(),
            })
            .collect();
        let summary = summarize_diagnostics(&ds, n);
        prop_assert_eq!(summary.top.len(), n.min(40));
        prop_assert_eq!(&summary.top, &oracle_top(&ds, n));
        prop_assert_eq!(summary.counts.values().sum::<usize>(), 40);
    }

    #[test]
    fn parse_never_aborts_on_json(value in arb_json()) {
        let text = value.to_string();
        let _ = parse_diagnostics(&text);
    }
}

fn arb_json() -> impl Strategy<Value = serde_json::Value> {
    use serde_json::Value;
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::from),
        "[a-z-]{0,8}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 32, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(Value::Array),
            prop::collection::btree_map(
                prop::sample::select(vec![
                    "type",
                    "line",
                    "column",
                    "message",
                    "message-id",
                    "messages",
                    "path",
                    "x"
                ])
                .prop_map(String::from),
                inner,
                0..6
            )
            .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}
