use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hormander::cli_report::{emit_all, load_config, run_suite, CliError, SUITES};

#[derive(Parser)]
#[command(name = "hormander", version, about = "Numerical checks for Hörmander spaces with RO-varying indices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite and write its reports.
    Run {
        /// Suite name; falls back to `suite` in the config.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to `output` in the config, then `out/`.
        #[arg(long, env = "HORMANDER_OUT")]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Validate { config } => {
            let r = load_config(&config)?;
            println!("{}: ok ({} catalog entries, digest {})", config.display(), r.catalog.len(), r.digest());
            Ok(true)
        }
        Command::Run { suite, config, seed, out } => {
            let mut r = load_config(&config)?;
            if let Some(s) = seed {
                r.config.seed = s;
            }
            let suite = suite
                .or_else(|| r.config.suite.clone())
                .ok_or_else(|| CliError::Invalid(format!("no suite given; expected one of {}", SUITES.join(", "))))?;
            let report = run_suite(&suite, &r)?;
            for c in &report.checks {
                println!("{}", c.summary());
            }
            let dir = out.or_else(|| r.config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
            emit_all(&report, &dir)?;
            let failed = report.failures().count();
            println!(
                "{suite}: {} checks, {failed} failed; reports in {}",
                report.checks.len(),
                dir.display()
            );
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
