use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use codeassay_core::config::{Config, ConfigError, OutputFormat, ProviderMode};
use codeassay_core::engine::{run_assessment, RunSummary, Services};
use codeassay_core::memory::MemoryStore;
use codeassay_core::provider::{HttpProvider, ModelProvider, ScriptedProvider};
use codeassay_core::runtime::{Clock, EventSink, NullSink, SystemClock};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "codeassay",
    version,
    about = "Multi-agent code quality assessment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assess a Python file, a directory or a GitHub repository URL.
    Assess(AssessArgs),
    /// Query reports remembered earlier in this process.
    Memory {
        #[command(subcommand)]
        action: MemoryAction,
    },
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    /// File path, directory path or GitHub URL.
    pub target: String,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// TOML configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub provider: Option<ProviderArg>,
    /// JSONL fixture file for the scripted provider.
    #[arg(long, value_name = "FILE")]
    pub fixtures: Option<PathBuf>,
    /// Skip the static linter.
    #[arg(long)]
    pub no_lint: bool,
    /// Keep the report in session memory.
    #[arg(long)]
    pub remember: bool,
}

#[derive(Debug, Subcommand)]
pub enum MemoryAction {
    Search {
        query: String,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Md,
    Html,
    Both,
}

impl FormatArg {
    fn formats(self) -> Vec<OutputFormat> {
        match self {
            FormatArg::Md => vec![OutputFormat::Markdown],
            FormatArg::Html => vec![OutputFormat::Html],
            FormatArg::Both => vec![OutputFormat::Markdown, OutputFormat::Html],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Live,
    Scripted,
}

/// State shared by the commands of one process. Memory lives only here.
pub struct CliSession {
    pub memory: MemoryStore,
    pub clock: Arc<dyn Clock>,
    pub sink: Arc<dyn EventSink>,
    pub env: BTreeMap<String, String>,
    pub seed: u64,
}

impl CliSession {
    pub fn new(env: BTreeMap<String, String>) -> Self {
        Self {
            memory: MemoryStore::new(),
            clock: Arc::new(SystemClock::new()),
            sink: Arc::new(NullSink),
            env,
            seed: 0,
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_sink(mut self, sink: Arc<dyn EventSink>) -> Self {
        self.sink = sink;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Parse `args` (program name first) and execute; returns the exit code.
pub fn run<I, T>(args: I, session: &CliSession, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match cli.command {
        Command::Assess(args) => assess(&args, session, out, err),
        Command::Memory {
            action: MemoryAction::Search { query, top },
        } => search(&query, top, session, out, err),
    }
}

/// File values, then `CODEASSAY_` variables, then flags.
pub fn effective_config(
    args: &AssessArgs,
    env: &BTreeMap<String, String>,
) -> Result<Config, ConfigError> {
    let mut cfg = Config::load(args.config.as_deref(), env)?;
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = args.format {
        cfg.output.formats = f.formats();
    }
    if let Some(p) = args.provider {
        cfg.provider.mode = match p {
            ProviderArg::Live => ProviderMode::Live,
            ProviderArg::Scripted => ProviderMode::Scripted,
        };
    }
    if let Some(f) = &args.fixtures {
        cfg.provider.fixtures = Some(f.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn provider_for(
    cfg: &Config,
    env: &BTreeMap<String, String>,
) -> Result<Arc<dyn ModelProvider>, String> {
    match cfg.provider.mode {
        ProviderMode::Live => {
            let settings = cfg.http_provider(env).map_err(|e| e.to_string())?;
            Ok(Arc::new(HttpProvider::new(settings)))
        }
        ProviderMode::Scripted => {
            let path = cfg
                .provider
                .fixtures
                .as_deref()
                .ok_or("scripted provider needs --fixtures or provider.fixtures")?;
            ScriptedProvider::load(path)
                .map(|p| Arc::new(p) as Arc<dyn ModelProvider>)
                .map_err(|e| format!("cannot load fixtures {}: {e}", path.display()))
        }
    }
}

fn assess(
    args: &AssessArgs,
    session: &CliSession,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cfg = match effective_config(args, &session.env) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let provider = match provider_for(&cfg, &session.env) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let services = Services {
        provider,
        clock: session.clock.clone(),
        sink: session.sink.clone(),
        env: session.env.clone(),
        memory: args.remember.then_some(&session.memory),
        lint: !args.no_lint,
        seed: session.seed,
    };
    match run_assessment(&args.target, &cfg, &services) {
        Ok(summary) => {
            print_summary(&summary, out);
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn print_summary(s: &RunSummary, out: &mut dyn Write) {
    let _ = writeln!(
        out,
        "Assessed {} file(s) from {} in {:.1}s: {} finding(s), {} recommendation(s)",
        s.units_assessed,
        s.source,
        s.duration.as_secs_f64(),
        s.findings,
        s.recommendations
    );
    for score in s.scores.iter() {
        let _ = writeln!(out, "  {:<16}{:.1}", score.dimension.label(), score.value);
    }
    for flag in &s.degraded {
        let _ = writeln!(out, "Degraded: {flag}");
    }
    for path in &s.outputs {
        let _ = writeln!(out, "Wrote {}", path.display());
    }
    if let Some(id) = &s.session_id {
        let _ = writeln!(out, "Remembered as {id}");
    }
}

fn search(
    query: &str,
    top: usize,
    session: &CliSession,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    match session.memory.search_memory(query, top) {
        Ok(hits) if hits.is_empty() => {
            let _ = writeln!(out, "No matching sessions.");
            EXIT_OK
        }
        Ok(hits) => {
            for h in hits {
                let _ = writeln!(
                    out,
                    "{} {:.3} {}\n    {}",
                    h.session_id, h.relevance, h.source_descriptor, h.snippet
                );
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("codeassay").chain(args.iter().copied()))
    }

    #[test]
    fn assess_flags_parse() {
        let cli = parse(&[
            "assess",
            "x.py",
            "--format",
            "both",
            "--provider",
            "scripted",
            "--no-lint",
            "--remember",
        ])
        .unwrap();
        let Command::Assess(a) = cli.command else {
            panic!("expected assess");
        };
        assert_eq!(a.target, "x.py");
        assert_eq!(a.format, Some(FormatArg::Both));
        assert!(a.no_lint && a.remember);
    }

    #[test]
    fn missing_target_is_usage() {
        let session = CliSession::new(BTreeMap::new());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["codeassay", "assess"], &session, &mut out, &mut err),
            1
        );
        assert!(String::from_utf8(err).unwrap().contains("Usage"));
    }

    #[test]
    fn version_exits_zero() {
        let session = CliSession::new(BTreeMap::new());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["codeassay", "--version"], &session, &mut out, &mut err),
            0
        );
        assert!(String::from_utf8(out)
            .unwrap()
            .contains(env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn flags_override_environment() {
        let env = BTreeMap::from([("CODEASSAY_OUTPUT__DIR".to_string(), "from-env".to_string())]);
        let cli = parse(&["assess", "x.py", "--provider", "scripted", "--out", "flag"]).unwrap();
        let Command::Assess(a) = cli.command else {
            panic!("expected assess");
        };
        assert_eq!(
            effective_config(&a, &env).unwrap().output.dir,
            PathBuf::from("flag")
        );
        let cli = parse(&["assess", "x.py", "--provider", "scripted"]).unwrap();
        let Command::Assess(a) = cli.command else {
            panic!("expected assess");
        };
        assert_eq!(
            effective_config(&a, &env).unwrap().output.dir,
            PathBuf::from("from-env")
        );
    }
}
