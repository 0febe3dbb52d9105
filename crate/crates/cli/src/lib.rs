//! Command-line front end for `mocapvar`: scenario files in, deterministic
//! JSON and CSV reports out.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod scenario_file;

use std::ffi::OsString;

use clap::Parser;
use serde_json::json;

use crate::args::{Cli, Command, Format};
use crate::commands::Outcome;
use crate::error::CliError;
use crate::output::{write_bytes, Report, TOOL_VERSION};

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Input(e.render().to_string().trim_end().to_string())),
    };
    match cli.threads {
        Some(0) => Err(CliError::Input("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?
            .install(|| execute(&cli)),
        None => execute(&cli),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    let outcome = match &cli.command {
        Command::Eval(a) => commands::eval(a, seed),
        Command::McCompare(a) => commands::mc_compare(a, seed),
        Command::Fig4(a) => commands::fig4(a, seed),
        Command::Fig5(a) => commands::fig5(a, seed),
        Command::ErrorMap(a) => commands::error_map(a, seed),
        Command::Select(a) => commands::select(a, seed),
        Command::RingGen(a) => commands::ring_gen(a, seed),
    }?;
    let format = cli.format.unwrap_or_else(|| cli.command.default_format());
    write_bytes(cli.output.as_deref(), &render(cli, format, outcome)?)
}

fn render(cli: &Cli, format: Format, outcome: Outcome) -> Result<Vec<u8>, CliError> {
    if let Some(raw) = outcome.raw {
        return Ok(raw);
    }
    match format {
        Format::Csv => outcome
            .table
            .ok_or_else(|| CliError::Input(format!("{} has no CSV form", cli.command.name())))?
            .to_bytes(),
        Format::Json => {
            let report = Report {
                command: json!({
                    "name": cli.command.name(),
                    "args": cli.command,
                    "seed": outcome.seed,
                }),
                version: TOOL_VERSION,
                scenario_hash: outcome.scenario_hash,
                results: outcome.results,
                timings: outcome.timings.into_map(),
            };
            Ok(report.to_json().into_bytes())
        }
    }
}
