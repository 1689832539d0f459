mod args;
mod commands;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use error::CliError;
use output::{Cell, TableWriter};
use verify::{run_checks, VerifyOptions};

fn run_verify(cli: &Cli, corrupt_recurrence: bool) -> Result<(), CliError> {
    let config = &cli.config;
    let checks = run_checks(config, VerifyOptions { corrupt_recurrence })?;
    let mut out = TableWriter::create(
        config.output.as_deref(),
        config.format.unwrap_or(Format::Json),
        vec!["suite", "check", "status", "metric", "tolerance"],
    )?;
    for c in &checks {
        out.row(&[
            c.suite.into(),
            c.check.into(),
            Cell::from(if c.passed() { "pass" } else { "fail" }),
            c.metric.into(),
            c.tolerance.into(),
        ])?;
    }
    out.finish(None)?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    eprintln!("{} checks, {failed} failed", checks.len());
    if failed > 0 {
        return Err(CliError::CheckFailed(failed));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.get())
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    }
    match cli.command {
        Command::Basis => commands::basis(&cli.config),
        Command::Sample => commands::sample(&cli.config),
        Command::Cov => commands::cov(&cli.config),
        Command::Verify { corrupt_recurrence } => run_verify(cli, corrupt_recurrence),
        Command::Fpt {
            threshold,
            p_cross_floor,
        } => commands::fpt(&cli.config, threshold, p_cross_floor),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
