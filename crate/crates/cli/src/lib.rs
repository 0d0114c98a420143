//! The `webrec` command line: ingest, represent, extract, score, synth and
//! report over an on-disk page store.
//!
//! Exit status is 0 on success, 1 when some pages were skipped (each one is
//! logged) and 2 on usage, configuration or I/O errors.

mod commands;
mod config;
pub mod store;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

pub use commands::score::ScoreReport;
pub use config::CONFIG_FILE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_FATAL: i32 = 2;

/// Whether a command finished for every page or had to skip some.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

impl Outcome {
    pub(crate) fn from_skipped(skipped: usize) -> Self {
        if skipped == 0 {
            Outcome::Complete
        } else {
            Outcome::Partial
        }
    }

    fn code(self) -> i32 {
        match self {
            Outcome::Complete => EXIT_OK,
            Outcome::Partial => EXIT_PARTIAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "webrec",
    version,
    about = "Benchmark pipeline for web data-record extraction"
)]
pub struct Cli {
    /// JSON file of default flag values; keys are flag names.
    #[arg(long, global = true, default_value = CONFIG_FILE)]
    pub config: PathBuf,

    /// Worker threads for per-page processing (0 = logical CPUs).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    pub log_level: LogLevel,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse MHTML snapshots into a page store.
    Ingest(IngestArgs),
    /// Render stored pages as model inputs and count their tokens.
    Represent(RepresentArgs),
    /// Run an extractor over a page store.
    Extract(ExtractArgs),
    /// Score predictions against ground truth.
    Score(ScoreArgs),
    /// Derive a synthetic page store with remapped ground truth.
    Synth(SynthArgs),
    /// Render score reports as a results table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// MHTML file or directory of snapshots (.mhtml, .mht, .html, .htm); repeatable.
    #[arg(long, default_value = "snapshots")]
    pub input: Vec<PathBuf>,
    /// Page store directory.
    #[arg(long, default_value = "store")]
    pub out: PathBuf,
    /// Drop the `head` subtree while cleaning.
    #[arg(long)]
    pub drop_head: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Slim,
    Hier,
    Flat,
}

impl FormatArg {
    pub fn kind(self) -> webrec::represent::RepresentationKind {
        use webrec::represent::RepresentationKind as K;
        match self {
            FormatArg::Slim => K::SlimmedHtml,
            FormatArg::Hier => K::HierarchicalJson,
            FormatArg::Flat => K::FlatJson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TokenizerArg {
    /// Characters divided by 4, rounded up.
    Chars4,
    /// Word runs plus punctuation characters.
    Ws,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    /// `/html[1]/body[1]/...`
    Indexed,
    /// `[1]` omitted where a tag has no same-tag siblings.
    Compact,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, value_enum, default_value_t = TokenizerArg::Chars4)]
    pub tokenizer: TokenizerArg,
    /// XPath style for flat JSON keys.
    #[arg(long, value_enum, default_value_t = StyleArg::Indexed)]
    pub style: StyleArg,
}

#[derive(Debug, Args)]
pub struct RepresentArgs {
    #[arg(long, default_value = "store")]
    pub store: PathBuf,
    /// Representations to write (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![FormatArg::Slim, FormatArg::Hier, FormatArg::Flat])]
    pub format: Vec<FormatArg>,
    #[command(flatten)]
    pub render: RenderArgs,
    /// Output directory for payloads and tokens.csv.
    #[arg(long, default_value = "reps")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mdr,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MdrInput {
    Full,
    Slim,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Mdr)]
    pub method: MethodArg,
    #[arg(long, default_value = "store")]
    pub store: PathBuf,
    /// Predictions file; with --runs > 1 each run gets a `.runN` suffix.
    #[arg(long, default_value = "preds.json")]
    pub out: PathBuf,
    /// Page markup MDR reads.
    #[arg(long, value_enum, default_value_t = MdrInput::Slim)]
    pub mdr_input: MdrInput,
    /// Longest generalized node MDR compares.
    #[arg(long, default_value_t = 10)]
    pub mdr_k: usize,
    /// Minimum similarity for adjacent generalized nodes.
    #[arg(long, default_value_t = 0.7)]
    pub mdr_threshold: f64,
    /// Minimum records in a region.
    #[arg(long, default_value_t = 2)]
    pub mdr_min_records: usize,
    /// Chat-completions endpoint.
    #[arg(long, default_value = "http://127.0.0.1:8787/v1/chat/completions")]
    pub endpoint: String,
    #[arg(long, default_value = "gemini-2.5-pro-preview-03-25")]
    pub model: String,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "WEBREC_API_KEY")]
    pub api_key_env: String,
    /// Retries after a transport error, 429 or 5xx.
    #[arg(long, default_value_t = 2)]
    pub max_retries: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 120.0)]
    pub timeout: f64,
    /// Requests in flight at once.
    #[arg(long, default_value_t = 2)]
    pub max_concurrent: usize,
    /// First retry delay in milliseconds.
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    /// Representation sent to the model.
    #[arg(long, value_enum, default_value_t = FormatArg::Flat)]
    pub format: FormatArg,
    #[command(flatten)]
    pub render: RenderArgs,
    /// Read payloads written by `represent` from this directory.
    #[arg(long)]
    pub reps: Option<PathBuf>,
    /// Prompt template with {format_instructions} and {payload} placeholders.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Independent extraction runs.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub runs: u32,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, default_value = "annotations.json")]
    pub gold: PathBuf,
    /// Predictions file; repeat to average several runs.
    #[arg(long, default_value = "preds.json")]
    pub pred: Vec<PathBuf>,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Also write one CSV row per page.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print metrics pooled over all pages as well.
    #[arg(long)]
    pub micro: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "store")]
    pub store: PathBuf,
    #[arg(long, default_value = "annotations.json")]
    pub gold: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Operations to enable (comma separated); defaults exclude duplicate_record and drop_record.
    #[arg(long, value_delimiter = ',', default_values_t = default_ops())]
    pub ops: Vec<String>,
    /// Chance that an op fires at each candidate site.
    #[arg(long, default_value_t = 0.5)]
    pub probability: f64,
    #[arg(long, default_value = "store-synth")]
    pub out: PathBuf,
}

fn default_ops() -> Vec<String> {
    let cfg = webrec::synth::SynthConfig::default();
    webrec::synth::SynthOp::ALL
        .into_iter()
        .filter(|op| cfg.enabled(*op))
        .map(|op| op.to_string())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Score report; repeat to add rows.
    #[arg(long = "in", default_value = "report.json")]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

/// Parses `args` (program name first), applies the config file and runs the
/// command. Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level.filter())
        .format_timestamp(None)
        .try_init();
    match commands::dispatch(&cli) {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}

fn parse(args: &[OsString]) -> Result<Cli, clap::Error> {
    let first = Cli::command().try_get_matches_from(args)?;
    let merged = config::apply(args, &first)
        .map_err(|e| Cli::command().error(clap::error::ErrorKind::Io, e))?;
    let matches = Cli::command().try_get_matches_from(merged)?;
    Cli::from_arg_matches(&matches)
}
