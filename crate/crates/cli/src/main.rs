//! Command-line front end: every subcommand writes a table with a provenance
//! header. Failures print a JSON object on stderr and exit with code 2.

mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use commands::CliError;

/// Overrides `--workers` when set.
const THREADS_ENV: &str = "EXTREMAL_SV_THREADS";

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(2)
}

fn workers(flag: usize) -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(CliError::input(format!("{THREADS_ENV}: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::new("usage", e.render().to_string().trim_end())),
    };
    let g = &cli.global;
    let workers = match workers(g.workers) {
        Ok(w) => w,
        Err(e) => return fail(&e),
    };
    let outcome = match commands::run(&cli.command, g, workers) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    let format = g.format.unwrap_or(match cli.command {
        Command::Construct(_) => Format::Json,
        _ => Format::Csv,
    });
    let text = outcome.report.render(format, g.seed, !g.no_timestamp);
    let written = match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(m) = written {
        return fail(&CliError::new("io", m));
    }
    ExitCode::from(outcome.exit_code as u8)
}
