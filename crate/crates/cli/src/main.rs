use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use codeassay_cli::{run, CliSession};
use codeassay_core::runtime::RunEvent;

fn main() {
    let env: BTreeMap<String, String> = std::env::vars().collect();
    let seed = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos() as u64);
    let progress = |event: RunEvent| {
        let _ = writeln!(std::io::stderr().lock(), "{event}");
    };
    let session = CliSession::new(env)
        .with_sink(Arc::new(progress))
        .with_seed(seed);
    let code = run(
        std::env::args_os(),
        &session,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
