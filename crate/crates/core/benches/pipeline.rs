//! Sequential versus parallel execution of a full directory assessment.
//!
//! The provider answers after a fixed simulated latency, so the comparison
//! measures how well fan-out overlaps model calls.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread::sleep;
use std::time::Duration;

use codeassay_core::config::{Config, ProviderMode};
use codeassay_core::engine::{run_assessment, Services};
use codeassay_core::provider::{
    FinishReason, ModelProvider, ModelResponse, PromptRequest, ProviderError, Usage,
};
use codeassay_core::runtime::{NullSink, SystemClock};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const FILES: usize = 8;
const LATENCY: Duration = Duration::from_millis(2);

struct SlowProvider;

impl ModelProvider for SlowProvider {
    fn generate(&self, req: &PromptRequest) -> Result<ModelResponse, ProviderError> {
        sleep(LATENCY);
        let text = match req.agent_name.as_str() {
            "correctness_assessor" => "## Findings\n- [minor] line 2: unused name\n## Score\n7/10",
            "style_assessor" => "## Findings\n(none)\n## Score\nStyle: 8/10\nMaintainability: 8/10",
            "description_generator" => "## Summary\nA small module.",
            "improvement_recommender" => {
                "## Recommendations\n1. [minor, low] Remove the unused name"
            }
            _ => "## Conclusion\nFine.",
        };
        Ok(ModelResponse {
            text: text.to_string(),
            finish_reason: FinishReason::Complete,
            usage: Usage::estimate(&req.user_content, text),
        })
    }
}

fn bench_pipeline(c: &mut Criterion) {
    let input = tempfile::tempdir().unwrap();
    for i in 0..FILES {
        let body: String = (0..40).map(|k| format!("v{k} = {k} * {i}\n")).collect();
        std::fs::write(input.path().join(format!("m{i}.py")), body).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    let services = Services {
        provider: Arc::new(SlowProvider),
        clock: Arc::new(SystemClock::new()),
        sink: Arc::new(NullSink),
        env: BTreeMap::new(),
        memory: None,
        lint: false,
        seed: 1,
    };
    let target = input.path().to_str().unwrap().to_string();

    let mut group = c.benchmark_group("directory_assessment");
    group.sample_size(10);
    for parallel in [false, true] {
        let mut cfg = Config::default();
        cfg.provider.mode = ProviderMode::Scripted;
        cfg.concurrency.parallel = parallel;
        cfg.concurrency.units = 4;
        cfg.output.dir = out.path().join(if parallel { "par" } else { "seq" });
        let label = if parallel { "parallel" } else { "sequential" };
        group.bench_with_input(BenchmarkId::new(label, FILES), &cfg, |b, cfg| {
            b.iter(|| run_assessment(&target, cfg, &services).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
