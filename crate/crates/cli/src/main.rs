use std::process::ExitCode;

use clap::Parser;
use specloop_cli::commands::{default_log_filter, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_log_filter(&cli))).init();
    run(cli)
}
