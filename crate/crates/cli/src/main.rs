//! `hsl`: criteria, maximal-inequality checks, covariance factorization and
//! simulation for triangular random series, with CSV or table reports.

mod commands;
mod config;
mod report;

use std::io::Write as _;
use std::process::ExitCode;

use clap::Parser;

use crate::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    let report = match commands::run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let text = report.render(cli.common.format);
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(report.exit_code() as u8)
}
