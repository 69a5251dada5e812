mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use carelabel::label::OutputFormat;
use carelabel::profiling::{MeterKind, DEFAULT_POWER_WATTS, DEFAULT_REPEATS};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "carelabel",
    version,
    about = "Certify MRF method configurations and render care labels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write the label files.
    Certify(CertifyArgs),
    /// Time the configured backend on the profiling suite.
    Profile(ProfileArgs),
    /// Run the reliability and bound checks and report them.
    Check(CheckArgs),
    /// Re-render an existing label.json.
    Render(RenderArgs),
    /// Knowledge database maintenance.
    Db {
        #[command(subcommand)]
        command: DbCommand,
    },
    /// Inspect the components of the knowledge database.
    Components {
        #[command(subcommand)]
        command: ComponentsCommand,
    },
}

#[derive(Subcommand)]
enum DbCommand {
    /// Check a database file against the schema.
    Validate {
        #[arg(long)]
        db: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ComponentsCommand {
    /// One line per component with its ratings.
    List {
        #[arg(long)]
        db: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Knowledge database file; the bundled database when omitted.
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long, default_value = "mrf")]
    method: String,
    #[arg(long, default_value = "likelihood")]
    loss: String,
    #[arg(long, default_value = "gd")]
    optimizer: String,
    #[arg(long, default_value = "jt")]
    inference: String,
}

#[derive(Args, Clone)]
struct SuiteArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Largest grid side of the profiling suite.
    #[arg(long, default_value_t = 8)]
    max_side: usize,
    /// Gibbs samples per suite grid.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    /// Assumed average power of the model-based meter.
    #[arg(long, env = "CARELABEL_POWER_WATTS", default_value_t = DEFAULT_POWER_WATTS)]
    power_watts: f64,
    /// Energy meter: model or rapl.
    #[arg(long, env = "CARELABEL_METER", default_value = "model")]
    meter: MeterKind,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of json, text, svg.
    #[arg(long, value_delimiter = ',', default_value = "json,text,svg")]
    format: Vec<OutputFormat>,
    /// Record the issue time on the label.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    suite: SuiteArgs,
    /// Directory for measurements.csv; printed only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    suite: SuiteArgs,
    /// Directory for checks.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 when any check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Label produced by `certify`.
    #[arg(long)]
    label: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,text,svg")]
    format: Vec<OutputFormat>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certify(args) => commands::certify(args),
        Command::Profile(args) => commands::profile(args),
        Command::Check(args) => commands::check(args),
        Command::Render(args) => commands::render(args),
        Command::Db {
            command: DbCommand::Validate { db },
        } => commands::db_validate(db),
        Command::Components {
            command: ComponentsCommand::List { db },
        } => commands::components_list(db),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
