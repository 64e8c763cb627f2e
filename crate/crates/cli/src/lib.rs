//! The `emodial` command line: generate, ingest, check, serve, sample, mine
//! and export.
//!
//! Exit codes: 0 success, 1 usage, 2 i/o, 3 provider, 4 validation.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emodial_core::curation::{Disposition, Qoi};
use emodial_core::sampler::TurnStratum;
use emodial_core::store::StoreError;
use emodial_core::{CefrLevel, Emotion, Role};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Provider(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Locked(_) | StoreError::Io(_) | StoreError::Corrupt { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "emodial", version, about = "Emotion-conditioned dialogue corpus pipeline")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Corpus file (default: the config's `store`, else corpus.jsonl).
    #[arg(long, global = true, value_name = "PATH")]
    pub store: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate dialogues with the configured provider and store them as pending.
    Generate(GenerateArgs),
    /// Parse transcript files and store them as pending.
    Ingest(IngestArgs),
    /// Re-run the automatic gates on a stored dialogue.
    Check(CheckArgs),
    /// Record a reviewer decision without the web UI.
    Review(ReviewArgs),
    /// Run the review service.
    Serve(ServeArgs),
    /// Run the sampled readability experiment over accepted dialogues.
    SampleReadability(SampleArgs),
    /// List recurring attitude-chain patterns.
    Mine(MineArgs),
    /// Export transcripts or CSV tables.
    Export(ExportArgs),
    /// Score plain-text files with the readability formulas.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, required_unless_present = "grid")]
    pub emotion: Option<Emotion>,
    #[arg(long, required_unless_present = "grid")]
    pub cefr: Option<CefrLevel>,
    #[arg(long)]
    pub implicit: bool,
    /// Dialogues per cell.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Every emotion, level and mode (36 cells).
    #[arg(long, conflicts_with_all = ["emotion", "cefr", "implicit"])]
    pub grid: bool,
    #[arg(long)]
    pub scenario: Option<String>,
    /// Turns per speaker.
    #[arg(long)]
    pub turns: Option<usize>,
    /// TOML file with provider settings, replacing the config's `[provider]`.
    #[arg(long, value_name = "PATH")]
    pub provider_config: Option<PathBuf>,
    /// Use the offline mock provider.
    #[arg(long)]
    pub mock: bool,
    /// Canned transcripts for the mock provider (implies --mock).
    #[arg(long, value_name = "DIR")]
    pub mock_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long)]
    pub emotion: Emotion,
    #[arg(long)]
    pub cefr: CefrLevel,
    #[arg(long)]
    pub implicit: bool,
    /// Accept `Customer` as the client speaker.
    #[arg(long)]
    pub customer_alias: bool,
    /// Explicit id; only with a single file.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub id: String,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ReviewArgs {
    pub id: String,
    #[arg(long)]
    pub qoi: Qoi,
    #[arg(long)]
    pub reviewer: String,
    /// Override the automatic emotional-coherence verdict.
    #[arg(long)]
    pub emotional_coherence: Option<bool>,
    /// Override the automatic complexity-coherence verdict.
    #[arg(long)]
    pub complexity_coherence: Option<bool>,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to bind (default: the config's `[service] listen`, else 127.0.0.1:8080).
    #[arg(long, value_name = "ADDR")]
    pub listen: Option<String>,
    /// Built review UI to serve under /ui/.
    #[arg(long, value_name = "DIR")]
    pub ui_dir: Option<PathBuf>,
    /// Shared token required in the x-emodial-token header.
    #[arg(long, env = "EMODIAL_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = emodial_core::sampler::DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Word cap per sample.
    #[arg(long, default_value_t = emodial_core::sampler::DEFAULT_CAP)]
    pub cap: usize,
    /// Comma-separated strata such as `A2/client,C2/agent` (default: all six).
    #[arg(long, value_delimiter = ',')]
    pub strata: Vec<TurnStratum>,
    /// Skip overflowing turns instead of stopping.
    #[arg(long)]
    pub skip_overflow: bool,
    /// Output file (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write the explicit-vs-implicit comparison CSV here.
    #[arg(long, value_name = "PATH")]
    pub modes_out: Option<PathBuf>,
    /// Append the individual runs to the store.
    #[arg(long)]
    pub record: bool,
    /// `text` writes CSV.
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub min_support: usize,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// One `<id>.txt` transcript per dialogue.
    Transcript,
    /// `gates.csv` and `metrics.csv`.
    Csv,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// `text` writes CSV.
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub emotion: Option<Emotion>,
    #[arg(long)]
    pub cefr: Option<CefrLevel>,
    #[arg(long)]
    pub implicit: Option<bool>,
    /// Dialogues with at least one turn by this role.
    #[arg(long)]
    pub role: Option<Role>,
    #[arg(long)]
    pub disposition: Option<Disposition>,
    #[arg(long)]
    pub qoi: Option<Qoi>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    use clap::error::ErrorKind;
    match Cli::try_parse_from(args) {
        Ok(cli) => commands::dispatch(cli, out),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            write!(out, "{e}")?;
            Ok(())
        }
        Err(e) => Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    }
}

/// Entry point used by the binary.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    let args: Vec<OsString> = args.into_iter().collect();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = run(args, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            // clap messages carry their own prefix.
            if msg.starts_with("error:") {
                eprintln!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
