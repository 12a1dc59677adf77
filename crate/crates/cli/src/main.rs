use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod error;
mod output;

use args::{Cli, Command};
use commands::Ctx;
use config::Config;

fn run(cli: Cli) -> error::Result<()> {
    let ctx = Ctx {
        config: Config::load(cli.config.as_deref())?,
        out: cli.out,
        workers: cli.workers,
        numeric: cli.numeric,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(&ctx, a),
        Command::Tail(a) => commands::tail::run(&ctx, a),
        Command::Stopping(a) => commands::stopping::run(&ctx, a),
        Command::Bellman(a) => commands::bellman::run(&ctx, a),
        Command::Report(a) => commands::report::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lablab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
