use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use codeassay_core::lint::LinterConfig;

/// A shell script standing in for the linter. It appends its path argument
/// to `seen.log`, prints `payload`, and exits with `status`.
pub struct StubLinter {
    pub dir: tempfile::TempDir,
    pub script: PathBuf,
}

impl StubLinter {
    pub fn new(payload: &str, status: i32) -> Self {
        Self::with_body(payload, &format!("exit {status}"))
    }

    pub fn with_body(payload: &str, tail: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let payload_path = dir.path().join("payload.out");
        fs::write(&payload_path, payload).unwrap();
        let log = dir.path().join("seen.log");
        let script = dir.path().join("linter.sh");
        fs::write(
            &script,
            format!(
                "#!/bin/sh\necho \"$1\" >> '{}'\ncat '{}'\n{tail}\n",
                log.display(),
                payload_path.display()
            ),
        )
        .unwrap();
        fs::set_permissions(&script, fs::Permissions::from_mode(0o755)).unwrap();
        Self { dir, script }
    }

    pub fn config(&self) -> LinterConfig {
        LinterConfig {
            command: self.script.to_string_lossy().into_owned(),
            ..LinterConfig::default()
        }
    }

    /// Temp paths the linter was invoked on, in call order.
    pub fn seen_paths(&self) -> Vec<PathBuf> {
        fs::read_to_string(self.dir.path().join("seen.log"))
            .unwrap_or_default()
            .lines()
            .map(PathBuf::from)
            .collect()
    }
}

pub fn fixture(name: &str) -> String {
    fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../core/tests/fixtures")
            .join(name),
    )
    .unwrap()
}
