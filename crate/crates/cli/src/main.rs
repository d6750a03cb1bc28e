use std::process::ExitCode;

use ampacity_uq_cli::commands;
use ampacity_uq_cli::config;
use ampacity_uq_cli::fail::Failure;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "ampacity-uq",
    version,
    about = "Probabilistic ampacity ratings for overhead lines"
)]
struct Cli {
    /// JSON file with defaults for shared flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Generate synthetic measured + forecast weather CSVs.
    Generate(commands::generate::GenerateArgs),
    /// Align weather series and emit forecast error samples.
    Ingest(commands::ingest::IngestArgs),
    /// Fit per-variable, per-horizon error distributions + KS report.
    FitErrors(commands::fit::FitErrorsArgs),
    /// Run the KS tests without fitting distributions.
    KsReport(commands::fit::KsReportArgs),
    /// Precompute the ampacity distribution database.
    BuildDb(commands::build::BuildDbArgs),
    /// Summarize a database file.
    DbInfo(commands::db_tools::DbInfoArgs),
    /// Export one interpolated CDF as CSV.
    DbExport(commands::db_tools::DbExportArgs),
    /// Confidence limits for one query or a batch of weather rows.
    Assess(commands::assess::AssessArgs),
    /// Compare modeled conductor temperature against sensor readings.
    ValidateSkinTemp(commands::validate::ValidateArgs),
    /// Compare assessed ratings against a static seasonal rating.
    CompareStatic(commands::compare::CompareArgs),
    /// Run the HTTP assessment service, or replay a demo cadence.
    Serve(commands::serve::ServeArgs),
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`ampacity-uq db-info | head`) instead of
    // panicking mid-print; Rust disables the default SIGPIPE action.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            failure.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(args) => commands::generate::run(args, &cfg),
        Command::Ingest(args) => commands::ingest::run(args, &cfg),
        Command::FitErrors(args) => commands::fit::run_fit(args, &cfg),
        Command::KsReport(args) => commands::fit::run_report(args, &cfg),
        Command::BuildDb(args) => commands::build::run(args, &cfg),
        Command::DbInfo(args) => commands::db_tools::run_info(args, &cfg),
        Command::DbExport(args) => commands::db_tools::run_export(args, &cfg),
        Command::Assess(args) => commands::assess::run(args, &cfg),
        Command::ValidateSkinTemp(args) => commands::validate::run(args, &cfg),
        Command::CompareStatic(args) => commands::compare::run(args, &cfg),
        Command::Serve(args) => commands::serve::run(args, &cfg),
    }
}
