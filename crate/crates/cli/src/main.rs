mod commands;
mod config;
mod emit;
mod error;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{Args, RunConfig};
use crate::error::CliError;

fn run(args: Args) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(args)?;
    log::debug!("{cfg:?}");
    let report = commands::run(&cfg)?;
    let text = emit::render(&cfg, report)?;
    emit::emit(&cfg, &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors.
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mincat: {e}");
            if let Some(dump) = e.residual_dump() {
                eprintln!("{dump}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
