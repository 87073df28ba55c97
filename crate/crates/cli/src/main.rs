//! `renorm`: command-line front end for renorm-core.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 I/O.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Format};
use commands::Usage;

/// Thread count for the parallel scans and sweeps.
const THREADS_VAR: &str = "RENORM_THREADS";

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")).into()),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let out = commands::dispatch(cli)?;
    let text = match cli.format {
        Format::Json => output::json_document(cli, &out.result)?,
        Format::Csv => out.table.render()?,
    };
    output::write_to(cli.output.as_deref(), &text)?;
    if let Some((path, table)) = &out.side {
        output::write_to(Some(path), &table.render()?)?;
    }
    match out.failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    if let Some(c) = e.downcast_ref::<renorm_core::Error>() {
        (if c.is_usage() { 2 } else { 3 }, c.kind())
    } else if e.downcast_ref::<Usage>().is_some() {
        (2, "Usage")
    } else {
        (1, "Io")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            eprintln!("error: {kind}: {e:#}");
            ExitCode::from(code)
        }
    }
}
